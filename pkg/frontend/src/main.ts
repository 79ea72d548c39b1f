import { StudioApp } from "./ui.js";

const root = document.getElementById("studio");
if (!root) {
  throw new Error("missing #studio mount point");
}
new StudioApp(root, "");
