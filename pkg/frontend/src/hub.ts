import type { ScenarioRow } from "./types";

// The hospital lobby: a tutorial entrance plus one door per drill.

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

export function renderHub(
  root: HTMLElement,
  rows: ScenarioRow[],
  onSelect: (scenarioId: string) => void,
): void {
  root.innerHTML = "";
  const screen = el("div", "hub");
  screen.appendChild(el("h1", "hub-title", "Hospital lobby"));

  if (rows.length === 0) {
    screen.appendChild(el("p", "hub-empty", "No scenarios are installed."));
    root.appendChild(screen);
    return;
  }

  const tutorials = rows.filter((r) => r.tier === 0);
  const drills = rows.filter((r) => r.tier > 0).sort((a, b) => a.tier - b.tier);

  for (const row of tutorials) {
    const entrance = el("button", "tutorial-entrance");
    entrance.dataset.scenario = row.id;
    entrance.appendChild(el("span", "door-title", row.title));
    entrance.appendChild(el("span", "door-sub", "Tutorial"));
    entrance.addEventListener("click", () => onSelect(row.id));
    screen.appendChild(entrance);
  }

  const doors = el("div", "doors");
  for (const row of drills) {
    const door = el("button", "door");
    door.dataset.scenario = row.id;
    door.appendChild(el("span", "door-title", row.title));
    door.appendChild(
      el(
        "span",
        "door-sub",
        `Level ${row.tier} - ${row.metrics.optimal_path_length} steps`,
      ),
    );
    door.addEventListener("click", () => onSelect(row.id));
    doors.appendChild(door);
  }
  screen.appendChild(doors);
  root.appendChild(screen);
}

export function renderHubError(
  root: HTMLElement,
  message: string,
  onRetry: () => void,
): void {
  root.innerHTML = "";
  const banner = el("div", "error-banner");
  banner.appendChild(el("p", undefined, `Cannot reach the service: ${message}`));
  const retry = el("button", "retry", "Retry");
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
  root.appendChild(banner);
}
