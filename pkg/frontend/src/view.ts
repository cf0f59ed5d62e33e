// DOM rendering: an 8x8 grid whose corners are the four buckets and
// whose inner 6x6 is the board. Pieces are draggable; buckets are drop
// targets. Rendering is a pure function of the session state, so the
// view can never drift from the server's board.

import { cellToRowCol } from './protocol.js';
import { GameSession } from './session.js';

export interface Meta {
  shapes: string[];
  colors: string[];
  board_size: number;
  bucket_corners: Array<[number, number]>;
}

const FALLBACK_PALETTE = [
  '#e6194b', '#3cb44b', '#4363d8', '#f58231', '#911eb4', '#46f0f0',
  '#f032e6', '#bcf60c', '#008080', '#9a6324',
];

const CSS_COLORS = new Set([
  'red', 'blue', 'black', 'yellow', 'green', 'orange', 'purple', 'pink',
  'brown', 'gray', 'grey', 'cyan', 'magenta',
]);

export class BoardView {
  private statusLine: HTMLElement;
  private grid: HTMLElement;
  private logPanel: HTMLElement;
  private donePanel: HTMLElement;
  private colorFor = new Map<string, string>();

  constructor(
    root: HTMLElement,
    private meta: Meta,
    private onDrop: (cell: number, bucket: number) => void,
    private onNew: () => void,
  ) {
    meta.colors.forEach((name, i) => {
      this.colorFor.set(
        name,
        CSS_COLORS.has(name) ? name : FALLBACK_PALETTE[i % FALLBACK_PALETTE.length],
      );
    });
    root.innerHTML = '';
    this.statusLine = el('div', 'status-line');
    this.grid = el('div', 'board-grid');
    this.logPanel = el('div', 'move-log');
    this.donePanel = el('div', 'done-panel');
    const newButton = el('button', 'new-button');
    newButton.textContent = 'Next episode';
    newButton.addEventListener('click', () => this.onNew());
    this.donePanel.append(el('span', 'done-text'), newButton);
    this.donePanel.style.display = 'none';
    root.append(this.statusLine, this.grid, this.donePanel, this.logPanel);
  }

  render(session: GameSession): void {
    this.statusLine.textContent =
      `episode ${session.episode + 1} | moves ${session.moveCount} | ` +
      `errors ${session.errorCount} | pieces ${session.board.length}`;

    this.grid.innerHTML = '';
    for (const [bucket, corner] of this.meta.bucket_corners.entries()) {
      this.grid.append(this.bucketNode(bucket, corner));
    }
    for (let cell = 1; cell <= 36; cell++) {
      this.grid.append(this.cellNode(cell, session));
    }

    const done = session.episodeOver;
    this.donePanel.style.display = done ? 'flex' : 'none';
    if (done) {
      const text = this.donePanel.querySelector('.done-text')!;
      text.textContent = session.cleared()
        ? 'Episode complete: board cleared!'
        : 'Episode complete: rule fully satisfied.';
    }

    this.logPanel.innerHTML = '';
    for (const entry of session.log.slice(-12).reverse()) {
      const row = el('div', entry.verdict === 0 ? 'log-accept' : 'log-reject');
      const { row: r, col: c } = cellToRowCol(entry.cell);
      row.textContent =
        `(${r},${c}) -> bucket ${entry.bucket}: ` +
        (entry.verdict === 0 ? '+0 accepted' : '-1 rejected');
      this.logPanel.append(row);
    }
  }

  // Bucket corners are (x, y) with y up: (0,7) top-left, (7,7) top-right,
  // (7,0) bottom-right, (0,0) bottom-left.
  private bucketNode(bucket: number, corner: [number, number]): HTMLElement {
    const node = el('div', 'bucket');
    node.dataset.bucket = String(bucket);
    const [x, y] = corner;
    node.style.gridRow = String(y === 7 ? 1 : 8);
    node.style.gridColumn = String(x === 7 ? 8 : 1);
    node.textContent = String(bucket);
    node.addEventListener('dragover', (ev) => ev.preventDefault());
    node.addEventListener('drop', (ev) => {
      ev.preventDefault();
      const cell = Number(ev.dataTransfer?.getData('text/cell'));
      if (Number.isInteger(cell) && cell >= 1) this.onDrop(cell, bucket);
    });
    return node;
  }

  private cellNode(cell: number, session: GameSession): HTMLElement {
    const node = el('div', 'cell');
    node.dataset.cell = String(cell);
    const { row, col } = cellToRowCol(cell);
    node.style.gridRow = String(row + 1);
    node.style.gridColumn = String(col + 1);
    const piece = session.pieceAt(cell);
    if (piece && !session.episodeOver) {
      const sprite = this.pieceNode(piece.shape, piece.color);
      sprite.draggable = true;
      sprite.addEventListener('dragstart', (ev) => {
        ev.dataTransfer?.setData('text/cell', String(cell));
      });
      node.append(sprite);
    } else if (piece) {
      node.append(this.pieceNode(piece.shape, piece.color));
    }
    return node;
  }

  private pieceNode(shape: string, color: string): HTMLElement {
    const wrap = el('div', 'piece');
    wrap.title = `${color} ${shape}`;
    const fill = this.colorFor.get(color) ?? 'slategray';
    wrap.innerHTML = pieceSvg(shape, fill);
    return wrap;
  }
}

function el(tag: string, cls: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  return node;
}

export function pieceSvg(shape: string, fill: string): string {
  const body = (() => {
    switch (shape) {
      case 'circle':
        return `<circle cx="20" cy="20" r="15" />`;
      case 'square':
        return `<rect x="6" y="6" width="28" height="28" />`;
      case 'triangle':
        return `<polygon points="20,4 36,34 4,34" />`;
      case 'star':
        return `<polygon points="20,2 24.7,14.2 37.8,14.6 27.4,22.6 31.2,35.2 20,27.8 8.8,35.2 12.6,22.6 2.2,14.6 15.3,14.2" />`;
      default:
        return `<rect x="6" y="10" width="28" height="20" rx="6" />`;
    }
  })();
  return `<svg viewBox="0 0 40 40" width="40" height="40" fill="${fill}" stroke="#333" stroke-width="1.5">${body}</svg>`;
}
