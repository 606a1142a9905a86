import { ApiClient, ApiError, NetworkError } from "./client";
import {
  canSubmit,
  emptyDraft,
  presentation,
  revealSecond,
  toSubmission,
  type LabelDraft,
} from "./draft";
import {
  AROUSAL_VALUES,
  VALENCE_VALUES,
  type Arousal,
  type Progress,
  type QueueItem,
  type Valence,
} from "./types";

type Phase = "entry" | "labeling" | "done";

const DIMENSION_OPTIONS = {
  valence: VALENCE_VALUES as readonly string[],
  arousal: AROUSAL_VALUES as readonly string[],
} as const;

type Dimension = keyof typeof DIMENSION_OPTIONS;

interface Banner {
  message: string;
  retry: (() => void) | null;
}

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

/** Single-page annotation client. All state lives here; the only thing
 *  that survives a submit is nothing — the next draft starts empty. */
export class AnnotationApp {
  readonly root: HTMLElement;
  private readonly client: ApiClient;

  phase: Phase = "entry";
  annotator = "";
  item: QueueItem | null = null;
  draft: LabelDraft = emptyDraft();
  private labeledHere = 0;
  private progress: Progress | null = null;
  private banner: Banner | null = null;
  private busy = false;
  private player: HTMLAudioElement | null = null;
  private readonly onKey = (event: KeyboardEvent) => this.handleKey(event);

  constructor(root: HTMLElement, client: ApiClient) {
    this.root = root;
    this.client = client;
    document.addEventListener("keydown", this.onKey);
    this.render();
  }

  dispose(): void {
    document.removeEventListener("keydown", this.onKey);
  }

  // --- actions ---------------------------------------------------------

  async start(annotator: string): Promise<void> {
    const name = annotator.trim();
    if (!name) {
      this.banner = { message: "Enter an annotator name first.", retry: null };
      this.render();
      return;
    }
    this.annotator = name;
    await this.advance();
  }

  /** Pull the next queue item (or the done marker) and re-render. */
  async advance(): Promise<void> {
    this.busy = true;
    this.render();
    try {
      const next = await this.client.fetchNext(this.annotator);
      this.banner = null;
      if (next.done) {
        this.phase = "done";
        this.item = null;
      } else {
        this.phase = "labeling";
        this.item = next;
        this.draft = emptyDraft();
      }
      await this.refreshProgress();
    } catch (err) {
      this.showFailure(err, () => void this.advance());
    } finally {
      this.busy = false;
      this.render();
    }
  }

  choose(dimension: Dimension, value: string): void {
    if (this.phase !== "labeling" || this.draft.erroneous) return;
    if (dimension === "valence") {
      this.draft.valence = value as Valence;
    } else {
      this.draft.arousal = value as Arousal;
    }
    this.render();
  }

  toggleErroneous(flag: boolean): void {
    if (this.phase !== "labeling") return;
    this.draft.erroneous = flag;
    if (flag) {
      this.draft.valence = null;
      this.draft.arousal = null;
    }
    this.render();
  }

  /** POST the current draft. The draft is only cleared on success; any
   *  failure keeps it intact for a retry or a correction. */
  async submit(): Promise<void> {
    if (this.phase !== "labeling" || this.busy || !this.item) return;
    if (!canSubmit(this.draft)) return;
    this.busy = true;
    this.render();
    try {
      await this.client.submitLabel(toSubmission(this.draft, this.item));
      this.labeledHere += 1;
      this.banner = null;
      this.busy = false;
      await this.advance();
      return;
    } catch (err) {
      this.showFailure(err, () => void this.submit());
    }
    this.busy = false;
    this.render();
  }

  replay(context: boolean): void {
    if (!this.item) return;
    const url = context ? this.item.context_url : this.item.audio_url;
    if (!url) return;
    if (!this.player) {
      this.player = document.createElement("audio");
    }
    this.player.src = this.client.url(url);
    try {
      const outcome = this.player.play?.();
      if (outcome && typeof outcome.catch === "function") {
        outcome.catch(() => {});
      }
    } catch {
      // playback is best-effort; a blocked autoplay must not break labeling
    }
  }

  private async refreshProgress(): Promise<void> {
    try {
      this.progress = await this.client.fetchProgress();
    } catch {
      // progress is cosmetic; keep the last known value
    }
  }

  private showFailure(err: unknown, retry: () => void): void {
    if (err instanceof NetworkError) {
      this.banner = {
        message: `Could not reach the server (${err.message}). `
          + "Nothing was lost; your answers are kept.",
        retry,
      };
    } else if (err instanceof ApiError) {
      this.banner = { message: `Server rejected the request: ${err.detail}`,
        retry: null };
    } else {
      this.banner = { message: String(err), retry: null };
    }
  }

  private handleKey(event: KeyboardEvent): void {
    if (this.phase !== "labeling" || this.busy || !this.item) return;
    const target = event.target as HTMLElement | null;
    if (target && target.tagName === "INPUT"
        && (target as HTMLInputElement).type === "text") {
      return;
    }
    const key = event.key.toLowerCase();
    if (key === "r") {
      this.replay(false);
    } else if (key === "c") {
      this.replay(true);
    } else if (key === "e") {
      this.toggleErroneous(!this.draft.erroneous);
    } else if (key === "enter") {
      void this.submit();
    } else if (key >= "1" && key <= "9" && !this.draft.erroneous) {
      const dimension = this.activeDimension();
      if (dimension) {
        const value = DIMENSION_OPTIONS[dimension][Number(key) - 1];
        if (value !== undefined) this.choose(dimension, value);
      }
    }
  }

  /** The panel number keys act on: the first unanswered dimension in
   *  presentation order. */
  private activeDimension(): Dimension | null {
    if (!this.item) return null;
    for (const dimension of presentation(this.item.dimension_order)) {
      if (this.draft[dimension] === null) return dimension;
    }
    return null;
  }

  // --- rendering -------------------------------------------------------

  render(): void {
    this.root.textContent = "";
    this.root.append(this.renderHeader());
    if (this.banner) this.root.append(this.renderBanner(this.banner));
    if (this.phase === "entry") {
      this.root.append(this.renderEntry());
    } else if (this.phase === "done") {
      this.root.append(this.renderDone());
    } else if (this.item) {
      this.root.append(this.renderItem(this.item));
    }
  }

  private renderHeader(): HTMLElement {
    const header = el("header", "topbar");
    header.append(el("h1", undefined, "Listening queue"));
    const status = el("div", "progress");
    status.dataset.testid = "progress";
    if (this.progress) {
      const { labeled, queue_size, percent } = this.progress;
      status.textContent = `${labeled} / ${queue_size} labeled (${percent}%)`;
      const bar = el("div", "progress-track");
      const fill = el("div", "progress-fill");
      fill.style.width = `${percent}%`;
      bar.append(fill);
      status.append(bar);
    }
    header.append(status);
    return header;
  }

  private renderBanner(banner: Banner): HTMLElement {
    const box = el("div", "banner");
    box.dataset.testid = "banner";
    box.append(el("span", undefined, banner.message));
    if (banner.retry) {
      const retry = el("button", "retry", "Retry");
      retry.dataset.testid = "retry";
      retry.addEventListener("click", banner.retry);
      box.append(retry);
    }
    return box;
  }

  private renderEntry(): HTMLElement {
    const form = el("section", "entry");
    form.append(el("p", undefined,
      "Enter your annotator name to start labeling."));
    const input = el("input");
    input.type = "text";
    input.placeholder = "annotator";
    input.dataset.testid = "annotator-input";
    const button = el("button", "primary", "Start");
    button.dataset.testid = "start";
    button.addEventListener("click", () => void this.start(input.value));
    input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void this.start(input.value);
    });
    form.append(input, button);
    return form;
  }

  private renderDone(): HTMLElement {
    const box = el("section", "done");
    box.dataset.testid = "done";
    box.append(el("h2", undefined, "Queue complete"));
    box.append(el("p", undefined,
      `You labeled ${this.labeledHere} clip(s) this session. Thank you!`));
    const link = el("a", undefined, "Download the annotation export");
    link.setAttribute("href", this.client.url("/export"));
    link.dataset.testid = "export-link";
    box.append(link);
    return box;
  }

  private renderItem(item: QueueItem): HTMLElement {
    const section = el("section", "item");
    section.dataset.testid = "item";
    section.dataset.uid = item.utterance_id;

    const meta = el("div", "meta");
    meta.append(el("span", "rank", `Clip ${item.rank} of ${item.queue_size}`));
    meta.append(el("span", "uid", item.utterance_id));
    section.append(meta);

    const audio = el("div", "audio");
    const play = el("button", undefined, "Play clip (r)");
    play.dataset.testid = "play";
    play.addEventListener("click", () => this.replay(false));
    audio.append(play);
    if (item.context_url) {
      const context = el("button", undefined, "Play 10 s context (c)");
      context.dataset.testid = "play-context";
      context.addEventListener("click", () => this.replay(true));
      audio.append(context);
    }
    section.append(audio);

    const order = presentation(item.dimension_order);
    const showSecond = revealSecond(this.draft, item.dimension_order);
    section.append(this.renderPanel(order[0]));
    if (showSecond) {
      section.append(this.renderPanel(order[1]));
    }

    const controls = el("div", "controls");
    const erroneous = el("label", "erroneous");
    const box = el("input");
    box.type = "checkbox";
    box.checked = this.draft.erroneous;
    box.dataset.testid = "erroneous";
    box.addEventListener("change", () => this.toggleErroneous(box.checked));
    erroneous.append(box,
      document.createTextNode(" Clip is erroneous / unusable (e)"));
    controls.append(erroneous);

    const submit = el("button", "primary", "Submit (enter)");
    submit.dataset.testid = "submit";
    submit.disabled = this.busy || !canSubmit(this.draft);
    submit.addEventListener("click", () => void this.submit());
    controls.append(submit);
    section.append(controls);
    return section;
  }

  private renderPanel(dimension: Dimension): HTMLElement {
    const panel = el("fieldset", "panel");
    panel.dataset.testid = `panel-${dimension}`;
    panel.append(el("legend", undefined,
      dimension === "valence" ? "Valence" : "Arousal"));
    if (this.draft.erroneous) panel.setAttribute("disabled", "");
    for (const [index, value] of DIMENSION_OPTIONS[dimension].entries()) {
      const button = el("button", "option", `${value} (${index + 1})`);
      button.dataset.testid = `${dimension}-${value}`;
      if (this.draft[dimension] === value) button.classList.add("selected");
      button.disabled = this.draft.erroneous;
      button.addEventListener("click", () => this.choose(dimension, value));
      panel.append(button);
    }
    return panel;
  }
}

export function createApp(root: HTMLElement, client: ApiClient):
    AnnotationApp {
  return new AnnotationApp(root, client);
}
