import { HttpApi } from "./api";
import { App } from "./app";
import { AudioBell } from "./audio";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
const app = new App(new HttpApi(), new AudioBell("bell.wav"), root);
void app.showHub();
