import type { Debrief } from "./types";

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

export function renderDebrief(
  root: HTMLElement,
  debrief: Debrief,
  onBack: () => void,
): void {
  root.innerHTML = "";
  const screen = el("div", "debrief");
  screen.appendChild(el("h1", undefined, "Debrief"));
  screen.appendChild(
    el("p", "debrief-outcome",
       `Outcome: ${debrief.outcome.toUpperCase()} with ` +
       `${debrief.total_mistakes} mistake(s). Covered ` +
       `${debrief.coverage.visited} of ${debrief.coverage.total} stages.`),
  );

  const table = el("table", "debrief-table");
  const head = el("tr");
  for (const col of ["stage", "attempts", "mistakes", "cues"]) {
    head.appendChild(el("th", undefined, col));
  }
  table.appendChild(head);
  for (const row of debrief.stages) {
    const tr = el("tr");
    tr.appendChild(el("td", undefined, row.stage_id));
    tr.appendChild(el("td", undefined, String(row.attempts)));
    tr.appendChild(el("td", undefined, String(row.mistakes)));
    tr.appendChild(el("td", undefined, String(row.cues_shown)));
    table.appendChild(tr);
  }
  screen.appendChild(table);

  if (debrief.mistakes.length > 0) {
    screen.appendChild(el("h2", undefined, "Decisions to review"));
    const list = el("ul", "mistake-list");
    for (const m of debrief.mistakes) {
      list.appendChild(
        el("li", undefined,
           `step ${m.step_index} at ${m.stage_id}: chose ${m.chosen}; ` +
           `correct was ${m.correct}`),
      );
    }
    screen.appendChild(list);
  }

  const back = el("button", "to-hub", "Back to the lobby");
  back.addEventListener("click", onBack);
  screen.appendChild(back);
  root.appendChild(screen);
}
