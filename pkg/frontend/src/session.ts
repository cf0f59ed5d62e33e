// Client session state. The server is the sole authority: every visual
// state change is caused by a server response, and the rendered board
// always equals the board of the last response. The hidden rule never
// reaches the client.

import {
  PieceRecord,
  ServerResponse,
  moveRequest,
  parseResponse,
} from './protocol.js';
import { Transport } from './transport.js';

export interface MoveLogEntry {
  cell: number;
  bucket: number;
  verdict: number;
  reward: number;
}

export class GameSession {
  board: PieceRecord[] = [];
  episode = -1;
  moveCount = 0;
  episodeOver = false;
  errorCount = 0;
  log: MoveLogEntry[] = [];
  /** Raw server lines, kept for audits (e.g. rule-leak checks). */
  readonly messages: string[] = [];

  constructor(private transport: Transport) {}

  private async exchange(line: string): Promise<ServerResponse> {
    const raw = await this.transport.request(line);
    this.messages.push(raw);
    const response = parseResponse(raw);
    if (response.status === 'ok' && response.board !== undefined) {
      this.board = response.board;
      this.episode = response.episode!;
      this.moveCount = response.moveCount!;
      this.episodeOver = response.episodeOver!;
    }
    return response;
  }

  async newEpisode(): Promise<ServerResponse> {
    const response = await this.exchange('NEW');
    if (response.status === 'ok') {
      this.log = [];
      this.errorCount = 0;
    }
    return response;
  }

  async refresh(): Promise<ServerResponse> {
    return this.exchange('DISPLAY');
  }

  async dragPiece(cell: number, bucket: number): Promise<ServerResponse> {
    const response = await this.exchange(moveRequest(cell, bucket));
    if (response.status === 'ok' && response.verdict !== undefined) {
      this.log.push({
        cell,
        bucket,
        verdict: response.verdict,
        reward: response.reward!,
      });
      if (response.reward! < 0) this.errorCount += 1;
    }
    return response;
  }

  async exit(): Promise<void> {
    try {
      await this.exchange('EXIT');
    } finally {
      this.transport.close();
    }
  }

  pieceAt(cell: number): PieceRecord | undefined {
    return this.board.find((p) => p.cell === cell);
  }

  cleared(): boolean {
    return this.episodeOver && this.board.length === 0;
  }
}
