// Secondary acceptance: drive a session to two mistakes in the DOM and
// check the health bar, the bell, the ratio submenu and the hub layout.

import { describe, expect, it } from "vitest";

import { App } from "../src/app";
import { renderSession } from "../src/session";
import type { ActionResponse, ViewState } from "../src/types";
import { FakeApi, SpyBell, fixtures, flush, mount, click } from "./helpers";

describe("acceptance", () => {
  it("hub renders the tutorial entrance plus three doors", async () => {
    const root = mount();
    const app = new App(new FakeApi(), new SpyBell(), root);
    await app.showHub();
    expect(root.querySelectorAll(".tutorial-entrance")).toHaveLength(1);
    expect(root.querySelectorAll(".door")).toHaveLength(3);
  });

  it("two mistakes ring the bell twice and leave 2 of 4 segments", async () => {
    const root = mount();
    const api = new FakeApi();
    api.actionQueue = [
      fixtures.mistake1 as ActionResponse,
      fixtures.mistake2 as ActionResponse,
    ];
    const bell = new SpyBell();
    const app = new App(api, bell, root);

    await app.showHub();
    click(root.querySelector('[data-scenario="slowing_heart"]'));
    await flush();
    expect(root.querySelectorAll(".segment.filled")).toHaveLength(4);

    // the wrong choice at this stage is unparameterized, so each click posts
    click(root.querySelector('[data-kind="pulse_oximeter"]'));
    await flush();
    expect(bell.rings).toBe(1);
    expect(root.querySelectorAll(".segment.filled")).toHaveLength(3);

    click(root.querySelector('[data-kind="pulse_oximeter"]'));
    await flush();
    expect(bell.rings).toBe(2);
    expect(root.querySelectorAll(".segment.filled")).toHaveLength(2);
    expect(root.querySelectorAll(".segment")).toHaveLength(4);
    expect(root.querySelector(".doctor-feedback")?.textContent).toBe(
      (fixtures.mistake2 as ActionResponse).feedback.utterance,
    );
  });

  it("correct responses never ring the bell", async () => {
    const root = mount();
    const api = new FakeApi();
    api.actionQueue = [fixtures.save_response as ActionResponse];
    const bell = new SpyBell();
    const app = new App(api, bell, root);
    await app.showHub();
    click(root.querySelector('[data-scenario="slowing_heart"]'));
    await flush();
    click(root.querySelector('[data-kind="warm_dry_stimulate"]'));
    await flush();
    expect(bell.rings).toBe(0);
  });

  it("the compression submenu lists the 3:1 ratio", () => {
    const root = mount();
    renderSession(root, fixtures.compressions_view as ViewState, null, {
      submit: () => {},
      toDebrief: () => {},
      toHub: () => {},
    });
    click(root.querySelector('[data-kind="chest_compressions"]'));
    const values = [...root.querySelectorAll(".param-choice")].map(
      (n) => n.textContent,
    );
    expect(values).toContain("3:1");
  });
});
