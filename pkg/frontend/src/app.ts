/**
 * Page assembly: the three session blocks (greeting, run form, history)
 * plus the public leaderboard charts. All game logic lives in the
 * DOM-free modules; this file only wires them to elements.
 */

import { ApiClient, ApiFailure } from "./api.js";
import { renderChartSvg } from "./charts.js";
import { RunFormState } from "./form.js";
import {
  SubmitGuard,
  greetingView,
  pageCount,
  shouldShowRunBox,
  tokenFromUrl,
} from "./state.js";
import { NUTRIENTS, Nutrient, RunRecord, StatusPayload } from "./types.js";

const API_BASE = ""; // same origin; the app is served under /app

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function yieldCells(run: RunRecord): string[] {
  const ys = run.yields.map((v) => v.toPrecision(6));
  while (ys.length < 10) ys.push("NA");
  return ys;
}

class SessionPage {
  private form = new RunFormState();
  private guard = new SubmitGuard();
  private page = 1;
  private banner: HTMLElement;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {
    this.banner = el("div", { class: "banner", hidden: "hidden" });
    this.root.appendChild(this.banner);
  }

  async render(): Promise<void> {
    let status: StatusPayload;
    try {
      status = await this.api.status();
    } catch (e) {
      this.root.replaceChildren(
        el("h2", {}, "Login failed"),
        el("p", {}, e instanceof ApiFailure ? e.message : String(e)),
        el("p", {}, "Check the ?token= part of the address."),
      );
      return;
    }
    this.root.replaceChildren(this.banner);
    this.renderGreeting(status);
    if (shouldShowRunBox(status)) {
      this.renderRunBlock();
    }
    await this.renderHistory();
    await this.renderLeaderboards();
  }

  private note(text: string, retriable = false): void {
    this.banner.textContent = retriable ? `${text} - your entries are kept; try again.` : text;
    this.banner.toggleAttribute("hidden", text === "");
  }

  private renderGreeting(status: StatusPayload): void {
    const block = el("section", { class: "block greeting" });
    const view = greetingView(status);
    block.appendChild(el("h2", {}, view.heading));
    for (const line of view.lines) block.appendChild(el("p", {}, line));
    this.root.appendChild(block);
  }

  private renderRunBlock(): void {
    const block = el("section", { class: "block run-box", id: "run-box" });
    block.appendChild(el("h2", {}, "New run"));
    const grid = el("div", { class: "grid" });
    const notes: Partial<Record<Nutrient | "reps", HTMLElement>> = {};

    for (const name of NUTRIENTS) {
      const label = el("label", {}, `${name} `);
      const input = el("input", { type: "text", name });
      input.addEventListener("input", () => {
        this.form.setField(name, input.value);
        refresh();
      });
      label.appendChild(input);
      const msg = el("span", { class: "field-msg" });
      notes[name] = msg;
      label.appendChild(msg);
      grid.appendChild(label);
    }

    const repsLabel = el("label", {}, "replicates ");
    const slider = el("input", {
      type: "range", min: "1", max: "10", step: "1", value: "1", name: "reps",
    });
    const repsOut = el("span", {}, "1");
    slider.addEventListener("input", () => {
      this.form.setReps(Number(slider.value));
      repsOut.textContent = String(this.form.reps);
      refresh();
    });
    repsLabel.append(slider, repsOut);
    grid.appendChild(repsLabel);
    block.appendChild(grid);

    const warning = el(
      "p", { class: "warning" },
      "There are no do-overs: a run is charged and recorded the moment it is submitted.",
    );
    const button = el("button", { disabled: "disabled" }, "Run");
    const refresh = () => {
      for (const name of NUTRIENTS) {
        notes[name]!.textContent = this.form.messageFor(name);
      }
      button.toggleAttribute("disabled", !this.form.submitEnabled);
    };
    button.addEventListener("click", () => void this.submit(button));
    block.append(warning, button);
    this.root.appendChild(block);
    refresh();
  }

  private async submit(button: HTMLButtonElement): Promise<void> {
    const payload = this.form.payload();
    if (payload === null || !this.guard.begin()) return;
    button.setAttribute("disabled", "disabled");
    try {
      await this.api.submitRun(payload.fields, payload.reps);
      this.note("");
      await this.render(); // server is authoritative: re-read everything
    } catch (e) {
      if (e instanceof ApiFailure && e.kind === "run_rejected") {
        this.note(`Run refused: ${e.message}`);
        await this.render();
      } else if (e instanceof ApiFailure && e.kind === "validation") {
        this.note(`The server rejected field ${e.field}: ${e.message}`);
      } else {
        this.note("Network problem while submitting", true);
      }
    } finally {
      this.guard.end();
      button.removeAttribute("disabled");
    }
  }

  private async renderHistory(): Promise<void> {
    const block = el("section", { class: "block history" });
    block.appendChild(el("h2", {}, "History"));
    const body = await this.api.history(this.page);
    const table = el("table");
    const head = el("tr");
    for (const h of ["week", ...NUTRIENTS, ...Array.from({ length: 10 }, (_, i) => `y${i + 1}`)]) {
      head.appendChild(el("th", {}, h));
    }
    table.appendChild(head);
    for (const run of body.runs) {
      const tr = el("tr");
      tr.appendChild(el("td", {}, String(run.week)));
      for (const n of NUTRIENTS) tr.appendChild(el("td", {}, String(run[n])));
      for (const cell of yieldCells(run)) tr.appendChild(el("td", {}, cell));
      table.appendChild(tr);
    }
    block.appendChild(table);

    const nav = el("div", { class: "pager" });
    const pages = pageCount(body.total, body.page_size);
    const prev = el("button", {}, "Newer");
    const next = el("button", {}, "Older");
    const where = el("span", {}, ` page ${body.page} of ${pages} `);
    prev.addEventListener("click", () => {
      this.page = Math.max(1, this.page - 1);
      void this.render();
    });
    next.addEventListener("click", () => {
      this.page = Math.min(pages, this.page + 1);
      void this.render();
    });
    nav.append(prev, where, next);

    // direct server link: the saved file is byte-identical to /download
    const download = el("a", { href: this.api.downloadUrl(), download: "history.csv" },
                        "Download");
    nav.appendChild(download);
    block.appendChild(nav);
    this.root.appendChild(block);
  }

  private async renderLeaderboards(): Promise<void> {
    const block = el("section", { class: "block leaderboard" });
    block.appendChild(el("h2", {}, "Leaderboard"));
    const toggle = el("button", {}, "Show raw views");
    const charts = el("div", { class: "charts" });
    let raw = false;
    const draw = async () => {
      const suffix = raw ? "raw" : "denoised";
      const byWeek = await this.api.leaderboard(`by_week_${suffix}`);
      const byRun = await this.api.leaderboard(`by_run_${suffix}`);
      charts.innerHTML =
        renderChartSvg(byWeek, { xLabel: "week of play" }) +
        renderChartSvg(byRun, { xLabel: "run number" });
      toggle.textContent = raw ? "Show de-noised views" : "Show raw views";
    };
    toggle.addEventListener("click", () => {
      raw = !raw;
      void draw();
    });
    block.append(toggle, charts);
    this.root.appendChild(block);
    await draw();
  }
}

export async function boot(): Promise<void> {
  const root = document.getElementById("app")!;
  const token = tokenFromUrl(window.location.search);
  if (!token) {
    root.replaceChildren(
      el("h2", {}, "No token"),
      el("p", {}, "Open this page as .../app/?token=YOURTOKEN"),
    );
    return;
  }
  const api = new ApiClient(API_BASE, token);
  await new SessionPage(api, root).render();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}
