// Browser entry point: render the controller's view into #app and translate
// DOM events into controller calls.

import { AdvisorClient } from "./api.js";
import { SessionController } from "./controller.js";
import { renderLobby, renderPlay, renderSummary } from "./render.js";
import type { CreateSessionRequest } from "./types.js";

const API_BASE =
  (globalThis as { ADVISOR_LAB_API?: string }).ADVISOR_LAB_API ??
  "http://127.0.0.1:8000";

function draw(root: HTMLElement, controller: SessionController): void {
  const v = controller.view();
  if (v.phase === "lobby") {
    root.innerHTML = renderLobby(v.envs);
  } else if (v.phase === "play" && v.state) {
    root.innerHTML = renderPlay(v.state, v.advice);
  } else if (v.summary) {
    root.innerHTML = renderSummary(v.summary);
  }
}

function formToRequest(form: HTMLFormElement): CreateSessionRequest {
  const data = new FormData(form);
  const num = (k: string) => Number(data.get(k));
  return {
    env: String(data.get("env")),
    skill: String(data.get("skill")),
    strategy: data.get("strategy") as CreateSessionRequest["strategy"],
    budget_mode: data.get("budget_mode") as CreateSessionRequest["budget_mode"],
    budget: num("budget"),
    seed: num("seed"),
  };
}

export async function boot(root: HTMLElement): Promise<void> {
  const controller = new SessionController(new AdvisorClient(API_BASE));
  await controller.loadLobby();
  draw(root, controller);

  root.addEventListener("submit", (ev) => {
    const form = ev.target as HTMLFormElement;
    if (form.dataset.role !== "new-session") return;
    ev.preventDefault();
    void controller.start(formToRequest(form)).then(() => draw(root, controller));
  });

  root.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    const run = (p: Promise<void>) => void p.then(() => draw(root, controller));
    if (el.dataset.role === "accept") return run(controller.acceptAdvice());
    if (el.dataset.role === "again") return run(controller.backToLobby());
    if (el.dataset.action !== undefined) {
      return run(controller.declineAdvice(Number(el.dataset.action)));
    }
  });
}

const appRoot = typeof document !== "undefined" ? document.getElementById("app") : null;
if (appRoot) void boot(appRoot);
