import { ApiClient } from "./client";
import { createApp } from "./app";
import "./styles.css";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

// Served statically by the annotation server itself, so same-origin.
// An access token can be carried in the fragment: #token=...
const fragment = new URLSearchParams(window.location.hash.slice(1));
createApp(root, new ApiClient({ token: fragment.get("token") ?? undefined }));
