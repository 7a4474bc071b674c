import { describe, expect, it, vi } from "vitest";

import { renderHub, renderHubError } from "../src/hub";
import type { ScenarioRow } from "../src/types";
import { fixtures, mount, click } from "./helpers";

const rows = fixtures.scenarios as ScenarioRow[];

describe("hub", () => {
  it("renders a tutorial entrance and one door per drill", () => {
    const root = mount();
    renderHub(root, rows, () => {});
    expect(root.querySelectorAll(".tutorial-entrance")).toHaveLength(1);
    expect(root.querySelectorAll(".door")).toHaveLength(3);
    const subs = [...root.querySelectorAll(".door .door-sub")].map(
      (n) => n.textContent,
    );
    expect(subs[0]).toContain("Level 1");
    expect(subs[2]).toContain("13 steps");
  });

  it("selecting a door reports the scenario id", () => {
    const root = mount();
    const picked: string[] = [];
    renderHub(root, rows, (id) => picked.push(id));
    click(root.querySelector('[data-scenario="slowing_heart"]'));
    expect(picked).toEqual(["slowing_heart"]);
  });

  it("shows a notice for an empty library", () => {
    const root = mount();
    renderHub(root, [], () => {});
    expect(root.querySelector(".hub-empty")?.textContent).toMatch(
      /no scenarios/i,
    );
  });

  it("shows a retry banner when the service is down", () => {
    const root = mount();
    const retry = vi.fn();
    renderHubError(root, "connection refused", retry);
    expect(root.querySelector(".error-banner")?.textContent).toContain(
      "connection refused",
    );
    click(root.querySelector(".retry"));
    expect(retry).toHaveBeenCalledOnce();
  });
});
