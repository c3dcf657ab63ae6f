// Results view: ranked list / grid toggle, relevance-feedback controls
// and display-side modality chips.
//
// Display order always equals server order; the chips only hide rows,
// they never re-rank.

import { ResultRow } from "../types.js";

export interface ResultsViewCallbacks {
  onMarkPositive(imageId: string): void;
  onMarkNegative(imageId: string): void;
  onSelect(row: ResultRow): void;
}

export class ResultsView {
  private container: HTMLElement;
  private toggleButton: HTMLButtonElement;
  private chipRow: HTMLElement;
  private grid = false;
  private visibleModalities: Set<string> | null = null;
  private rows: ResultRow[] = [];

  constructor(root: HTMLElement, private readonly callbacks: ResultsViewCallbacks) {
    root.innerHTML = `
      <div class="results-view">
        <div class="results-toolbar">
          <button class="toggle">grid view</button>
          <span class="result-chips"></span>
        </div>
        <div class="results list"></div>
      </div>`;
    this.container = root.querySelector(".results")!;
    this.toggleButton = root.querySelector(".toggle")!;
    this.chipRow = root.querySelector(".result-chips")!;
    this.toggleButton.addEventListener("click", () => {
      this.grid = !this.grid;
      this.toggleButton.textContent = this.grid ? "list view" : "grid view";
      this.renderRows();
    });
  }

  render(rows: ResultRow[]): void {
    this.rows = rows;
    this.visibleModalities = null;
    this.renderChips();
    this.renderRows();
  }

  private renderChips(): void {
    this.chipRow.textContent = "";
    const tags = [...new Set(this.rows.map((r) => r.modality).filter((m): m is string => !!m))];
    for (const tag of tags.sort()) {
      const chip = document.createElement("button");
      chip.className = "chip";
      chip.textContent = tag;
      chip.addEventListener("click", () => {
        if (this.visibleModalities?.has(tag)) {
          this.visibleModalities.delete(tag);
          if (this.visibleModalities.size === 0) this.visibleModalities = null;
        } else {
          this.visibleModalities = this.visibleModalities ?? new Set();
          this.visibleModalities.add(tag);
        }
        chip.classList.toggle("chip-active");
        this.renderRows();
      });
      this.chipRow.appendChild(chip);
    }
  }

  private renderRows(): void {
    this.container.className = "results " + (this.grid ? "grid" : "list");
    this.container.textContent = "";
    for (const row of this.rows) {
      if (this.visibleModalities && (!row.modality || !this.visibleModalities.has(row.modality))) {
        continue;
      }
      this.container.appendChild(this.renderRow(row));
    }
  }

  private renderRow(row: ResultRow): HTMLElement {
    const card = document.createElement("div");
    card.className = "result-card";
    card.draggable = true;
    card.addEventListener("dragstart", (event) => {
      event.dataTransfer?.setData("application/x-image-id", row.imageId);
    });

    const thumb = document.createElement("img");
    thumb.className = "thumb";
    thumb.alt = row.imageId;
    if (row.uri) thumb.src = row.uri;
    thumb.addEventListener("error", () => {
      thumb.replaceWith(brokenBadge());
    });
    thumb.addEventListener("click", () => this.callbacks.onSelect(row));

    const label = document.createElement("div");
    label.className = "result-label";
    label.textContent = `${row.rank}. ${row.imageId} (${row.score.toFixed(4)})`;
    label.addEventListener("click", () => this.callbacks.onSelect(row));

    const plus = feedbackButton("+", "relevant", () => this.callbacks.onMarkPositive(row.imageId));
    const minus = feedbackButton("−", "non-relevant", () =>
      this.callbacks.onMarkNegative(row.imageId),
    );

    card.append(thumb, label, plus, minus);
    if (row.modality) {
      const tag = document.createElement("span");
      tag.className = "result-modality";
      tag.textContent = row.modality;
      card.appendChild(tag);
    }
    return card;
  }
}

function feedbackButton(text: string, title: string, onClick: () => void): HTMLButtonElement {
  const button = document.createElement("button");
  button.className = "feedback";
  button.textContent = text;
  button.title = `mark as ${title}`;
  button.addEventListener("click", onClick);
  return button;
}

function brokenBadge(): HTMLElement {
  const badge = document.createElement("div");
  badge.className = "thumb thumb-broken";
  badge.textContent = "image unavailable";
  return badge;
}
