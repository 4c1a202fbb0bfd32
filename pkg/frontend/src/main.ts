import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { AppView } from "./render.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8331";

const controller = new SessionController(new ApiClient(baseUrl));
const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");
const view = new AppView(root, controller);

void (async () => {
  await controller.connect();
  await view.render();
})();
