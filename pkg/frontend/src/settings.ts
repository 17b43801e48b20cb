/** Remappable input bindings and view options.
 *
 * Pointer events are classified here instead of hard-coding buttons at
 * the call sites, so the settings panel can remap the star button and
 * the combine/manual modifiers without touching interaction code.
 */

export type ModifierKey = "ctrlKey" | "shiftKey" | "altKey" | "metaKey";

export interface Settings {
  /** Pointer button that selects the whole image (default: middle). */
  starButton: number;
  /** Modifier held while clicking palette images to combine dips. */
  combineModifier: ModifierKey;
  /** Modifier held at paint start to diffuse manually while pressed. */
  manualModifier: ModifierKey;
  overlayEnabled: boolean;
}

export interface PointerLike {
  button: number;
  ctrlKey: boolean;
  shiftKey: boolean;
  altKey: boolean;
  metaKey: boolean;
}

export interface Classified {
  star: boolean;
  combine: boolean;
  manual: boolean;
}

export interface SettingsStore {
  get(): Settings;
  set(patch: Partial<Settings>): void;
  onChange(listener: (settings: Settings) => void): () => void;
  classify(event: PointerLike): Classified;
}

export const DEFAULT_SETTINGS: Settings = {
  starButton: 1,
  combineModifier: "ctrlKey",
  manualModifier: "shiftKey",
  overlayEnabled: true,
};

export const createSettingsStore = (
  initial: Partial<Settings> = {},
): SettingsStore => {
  let settings: Settings = { ...DEFAULT_SETTINGS, ...initial };
  const listeners = new Set<(settings: Settings) => void>();

  return {
    get: () => settings,
    set(patch: Partial<Settings>): void {
      settings = { ...settings, ...patch };
      for (const listener of listeners) {
        listener(settings);
      }
    },
    onChange(listener: (settings: Settings) => void): () => void {
      listeners.add(listener);
      return () => listeners.delete(listener);
    },
    classify(event: PointerLike): Classified {
      return {
        star: event.button === settings.starButton,
        combine: event[settings.combineModifier],
        manual: event[settings.manualModifier],
      };
    },
  };
};
