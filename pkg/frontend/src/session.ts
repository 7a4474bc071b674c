import type { Feedback, MenuItem, ViewState } from "./types";

export type SessionHandlers = {
  submit: (kind: string, param: string | null) => void;
  toDebrief: () => void;
  toHub: () => void;
};

const HEALTH_SEGMENTS = 4;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

// Segment count comes straight from the service-reported health value.
function healthBar(health: number): HTMLElement {
  const bar = el("div", "health-bar");
  bar.dataset.health = String(health);
  for (let i = 0; i < HEALTH_SEGMENTS; i++) {
    bar.appendChild(
      el("span", i < health ? "segment filled" : "segment empty"),
    );
  }
  return bar;
}

function vitalsPanel(view: ViewState): HTMLElement {
  const panel = el("div", "vitals");
  const pulse = el("div", "pulse");
  pulse.appendChild(el("span", "pulse-value", String(view.vitals.heart_rate)));
  pulse.appendChild(el("span", "pulse-unit", "bpm"));
  panel.appendChild(pulse);
  panel.appendChild(healthBar(view.health));
  panel.appendChild(
    el("div", "vitals-line",
       `breathing: ${view.vitals.breathing} | tone: ${view.vitals.tone}`),
  );
  return panel;
}

function doctorPane(view: ViewState, feedback: Feedback | null): HTMLElement {
  const pane = el("div", "doctor-pane");
  pane.appendChild(el("div", "doctor-name", "Dr. Osler"));
  if (feedback?.utterance) {
    const line = el("p", "doctor-feedback", feedback.utterance);
    line.dataset.feedback = feedback.kind;
    pane.appendChild(line);
  }
  if (view.cue) {
    pane.appendChild(el("p", "doctor-cue", view.cue.text));
  }
  if (!feedback?.utterance && !view.cue) {
    pane.appendChild(el("p", "doctor-waiting", "Your call."));
  }
  return pane;
}

function submenu(item: MenuItem, handlers: SessionHandlers): HTMLElement {
  const box = el("div", "submenu");
  box.dataset.kind = item.kind;
  box.appendChild(el("div", "submenu-title", item.label));
  for (const choice of item.param_choices ?? []) {
    const btn = el("button", "param-choice", choice.value);
    btn.title = choice.label;
    btn.dataset.value = choice.value;
    btn.addEventListener("click", () => handlers.submit(item.kind, choice.value));
    box.appendChild(btn);
  }
  return box;
}

function actionMenu(view: ViewState, handlers: SessionHandlers): HTMLElement {
  const menu = el("div", "menu");
  for (const item of view.menu) {
    const btn = el("button", "action", item.label);
    btn.dataset.kind = item.kind;
    btn.addEventListener("click", () => {
      const open = menu.querySelector(".submenu");
      if (open) open.remove();
      if (item.parameterized) {
        // the parameter must be picked before anything goes to the server
        btn.insertAdjacentElement("afterend", submenu(item, handlers));
      } else {
        handlers.submit(item.kind, null);
      }
    });
    menu.appendChild(btn);
  }
  return menu;
}

function endScreen(view: ViewState, handlers: SessionHandlers): HTMLElement {
  const screen = el("div", `end-screen ${view.outcome}`);
  const headline =
    view.outcome === "saved"
      ? "The baby is safe."
      : view.outcome === "died"
        ? "The baby did not make it."
        : "Session over.";
  screen.appendChild(el("h1", "end-title", headline));
  screen.appendChild(
    el("p", "end-sub",
       `${view.mistakes} mistake(s) of ${view.max_mistakes} allowed.`),
  );
  const debriefBtn = el("button", "to-debrief", "Debrief");
  debriefBtn.addEventListener("click", handlers.toDebrief);
  screen.appendChild(debriefBtn);
  const hubBtn = el("button", "to-hub", "Back to the lobby");
  hubBtn.addEventListener("click", handlers.toHub);
  screen.appendChild(hubBtn);
  return screen;
}

export function renderSession(
  root: HTMLElement,
  view: ViewState,
  feedback: Feedback | null,
  handlers: SessionHandlers,
): void {
  root.innerHTML = "";
  const screen = el("div", "session");
  screen.appendChild(el("h2", "scenario-title", view.scenario_title));

  if (view.outcome !== "ongoing" || view.abandoned) {
    screen.appendChild(vitalsPanel(view));
    screen.appendChild(endScreen(view, handlers));
    root.appendChild(screen);
    return;
  }

  screen.appendChild(vitalsPanel(view));
  screen.appendChild(el("p", "prompt", view.prompt));
  screen.appendChild(doctorPane(view, feedback));
  screen.appendChild(actionMenu(view, handlers));
  root.appendChild(screen);
}

export function renderSessionError(root: HTMLElement, kind: string,
                                   message: string): void {
  const existing = root.querySelector(".error-banner");
  if (existing) existing.remove();
  const banner = el("div", "error-banner");
  banner.dataset.kind = kind;
  banner.textContent = `${kind}: ${message}`;
  root.prepend(banner);
}
