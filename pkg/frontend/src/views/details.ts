// Details view: full-size image with zoom/pan, caption, source
// article link and the search-similar action.

import { ResultRow } from "../types.js";

export interface DetailsViewCallbacks {
  onSearchSimilar(imageId: string): void;
}

export class DetailsView {
  private root: HTMLElement;
  private scale = 1;
  private offsetX = 0;
  private offsetY = 0;

  constructor(root: HTMLElement, private readonly callbacks: DetailsViewCallbacks) {
    this.root = root;
    this.root.innerHTML = `<div class="details-view"><p class="hint">select a result</p></div>`;
  }

  render(row: ResultRow): void {
    this.scale = 1;
    this.offsetX = 0;
    this.offsetY = 0;
    const panel = document.createElement("div");
    panel.className = "details-view";

    const frame = document.createElement("div");
    frame.className = "details-frame";
    const image = document.createElement("img");
    image.className = "details-image";
    image.alt = row.imageId;
    if (row.uri) image.src = row.uri;
    image.addEventListener("error", () => {
      const badge = document.createElement("div");
      badge.className = "details-image thumb-broken";
      badge.textContent = "image unavailable";
      image.replaceWith(badge);
    });
    frame.appendChild(image);
    this.attachZoomPan(frame, image);

    const caption = document.createElement("p");
    caption.className = "details-caption";
    caption.textContent = row.caption ?? "(no caption)";

    const meta = document.createElement("p");
    meta.className = "details-meta";
    meta.textContent = `${row.imageId} - rank ${row.rank}, score ${row.score.toFixed(4)}` +
      (row.modality ? `, modality ${row.modality}` : "");

    const actions = document.createElement("div");
    actions.className = "details-actions";
    if (row.articleUri) {
      const link = document.createElement("a");
      link.href = row.articleUri;
      link.target = "_blank";
      link.rel = "noopener";
      link.textContent = "open source article";
      actions.appendChild(link);
    }
    const similar = document.createElement("button");
    similar.className = "search-similar";
    similar.textContent = "search similar";
    similar.addEventListener("click", () => this.callbacks.onSearchSimilar(row.imageId));
    actions.appendChild(similar);

    panel.append(frame, meta, caption, actions);
    this.root.replaceChildren(panel);
  }

  private attachZoomPan(frame: HTMLElement, image: HTMLImageElement): void {
    const apply = () => {
      image.style.transform =
        `translate(${this.offsetX}px, ${this.offsetY}px) scale(${this.scale})`;
    };
    frame.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = event.deltaY < 0 ? 1.15 : 1 / 1.15;
      this.scale = Math.min(8, Math.max(0.25, this.scale * factor));
      apply();
    });
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    frame.addEventListener("pointerdown", (event) => {
      dragging = true;
      lastX = event.clientX;
      lastY = event.clientY;
      frame.setPointerCapture(event.pointerId);
    });
    frame.addEventListener("pointermove", (event) => {
      if (!dragging) return;
      this.offsetX += event.clientX - lastX;
      this.offsetY += event.clientY - lastY;
      lastX = event.clientX;
      lastY = event.clientY;
      apply();
    });
    frame.addEventListener("pointerup", () => {
      dragging = false;
    });
  }
}
