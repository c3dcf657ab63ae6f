// Query view: text box, positive/negative example wells, modality
// chips and the submit button.

import { fileToImageRef } from "../client.js";
import { refKey, SessionQueryState } from "../state.js";
import { ImageRef } from "../types.js";

export interface QueryViewCallbacks {
  onText(text: string): void;
  onMarkPositive(ref: ImageRef): void;
  onMarkNegative(ref: ImageRef): void;
  onUnmark(ref: ImageRef): void;
  onToggleModality(tag: string): void;
  onSubmit(): void;
}

export class QueryView {
  private textInput: HTMLInputElement;
  private positiveWell: HTMLElement;
  private negativeWell: HTMLElement;
  private modalityRow: HTMLElement;
  private submitButton: HTMLButtonElement;

  constructor(
    root: HTMLElement,
    private readonly modalities: string[],
    private readonly callbacks: QueryViewCallbacks,
  ) {
    root.innerHTML = `
      <div class="query-view">
        <div class="query-text-row">
          <input type="text" class="query-text" placeholder="Describe what you are looking for" />
          <button class="submit" disabled>Search</button>
        </div>
        <div class="wells">
          <div class="well well-positive" data-kind="positive">
            <h3>Positive examples</h3>
            <div class="well-items"></div>
            <p class="hint">drop images or use + on results</p>
          </div>
          <div class="well well-negative" data-kind="negative">
            <h3>Negative examples</h3>
            <div class="well-items"></div>
            <p class="hint">drop images or use &minus; on results</p>
          </div>
        </div>
        <div class="modality-row"></div>
      </div>`;
    this.textInput = root.querySelector(".query-text")!;
    this.positiveWell = root.querySelector(".well-positive .well-items")!;
    this.negativeWell = root.querySelector(".well-negative .well-items")!;
    this.modalityRow = root.querySelector(".modality-row")!;
    this.submitButton = root.querySelector(".submit")!;

    this.textInput.addEventListener("input", () => callbacks.onText(this.textInput.value));
    this.textInput.addEventListener("keydown", (event) => {
      if (event.key === "Enter") callbacks.onSubmit();
    });
    this.submitButton.addEventListener("click", () => callbacks.onSubmit());

    for (const well of root.querySelectorAll<HTMLElement>(".well")) {
      well.addEventListener("dragover", (event) => event.preventDefault());
      well.addEventListener("drop", (event) => this.onDrop(event, well.dataset.kind!));
    }
  }

  private async onDrop(event: DragEvent, kind: string): Promise<void> {
    event.preventDefault();
    const imageId = event.dataTransfer?.getData("application/x-image-id");
    let ref: ImageRef | null = null;
    if (imageId) {
      ref = { imageId };
    } else if (event.dataTransfer?.files.length) {
      ref = await fileToImageRef(event.dataTransfer.files[0]);
    }
    if (!ref) return;
    if (kind === "positive") {
      this.callbacks.onMarkPositive(ref);
    } else {
      this.callbacks.onMarkNegative(ref);
    }
  }

  render(state: SessionQueryState): void {
    if (this.textInput.value !== state.text) {
      this.textInput.value = state.text;
    }
    this.submitButton.disabled = !(state.positives.length > 0 || state.text.trim().length > 0);
    this.renderWell(this.positiveWell, state.positives);
    this.renderWell(this.negativeWell, state.negatives);

    this.modalityRow.textContent = "";
    for (const tag of this.modalities) {
      const chip = document.createElement("button");
      chip.className = "chip" + (state.modalityFilter.includes(tag) ? " chip-active" : "");
      chip.textContent = tag;
      chip.addEventListener("click", () => this.callbacks.onToggleModality(tag));
      this.modalityRow.appendChild(chip);
    }
  }

  private renderWell(container: HTMLElement, refs: ImageRef[]): void {
    container.textContent = "";
    for (const ref of refs) {
      const item = document.createElement("span");
      item.className = "well-item";
      item.textContent = ref.imageId ?? "uploaded image";
      item.title = refKey(ref);
      const remove = document.createElement("button");
      remove.className = "well-remove";
      remove.textContent = "x";
      remove.addEventListener("click", () => this.callbacks.onUnmark(ref));
      item.appendChild(remove);
      container.appendChild(item);
    }
  }
}
