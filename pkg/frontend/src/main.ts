import { createApp } from "./app.js";
import type { HttpFetch } from "./client.js";
import { createServiceClient } from "./client.js";

const httpFetch: HttpFetch = (url, init) => fetch(url, init);

const root = document.getElementById("app");
if (root !== null) {
  createApp(root, (baseUrl) => createServiceClient(baseUrl, httpFetch));
}
