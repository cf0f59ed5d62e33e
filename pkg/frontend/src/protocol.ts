// Client side of the captive game server's line protocol: one request
// line out, one key=value response line back. See docs/protocol.md in
// the repository root for the frozen grammar.

export interface PieceRecord {
  cell: number;
  shape: string;
  color: string;
}

export interface ServerResponse {
  status: 'ok' | 'error';
  error?: string;
  episode?: number;
  moveCount?: number;
  episodeOver?: boolean;
  verdict?: number; // 0 accept, 1 reject (MOVE responses only)
  reward?: number;
  board?: PieceRecord[];
}

export function parseResponse(line: string): ServerResponse {
  const trimmed = line.trim();
  if (trimmed === 'status=ok') {
    return { status: 'ok' }; // EXIT acknowledgement carries no state
  }
  const fields = new Map<string, string>();
  for (const token of trimmed.split(' ')) {
    const eq = token.indexOf('=');
    if (eq < 0) throw new Error(`bad protocol token: ${token}`);
    fields.set(token.slice(0, eq), token.slice(eq + 1));
  }
  const status = fields.get('status');
  if (status === 'error') {
    return { status: 'error', error: fields.get('error') ?? 'unknown' };
  }
  if (status !== 'ok') throw new Error(`bad status in: ${line}`);
  const response: ServerResponse = {
    status: 'ok',
    episode: intField(fields, 'episode'),
    moveCount: intField(fields, 'move_count'),
    episodeOver: intField(fields, 'episode_over') === 1,
    board: parseBoard(fields.get('board') ?? ''),
  };
  if (fields.has('verdict')) {
    response.verdict = intField(fields, 'verdict');
    response.reward = intField(fields, 'reward');
  }
  return response;
}

function intField(fields: Map<string, string>, key: string): number {
  const raw = fields.get(key);
  if (raw === undefined) throw new Error(`missing ${key}`);
  const value = Number(raw);
  if (!Number.isInteger(value)) throw new Error(`bad ${key}: ${raw}`);
  return value;
}

export function parseBoard(encoded: string): PieceRecord[] {
  if (encoded === '') return [];
  return encoded.split(',').map((record) => {
    const parts = record.split(':');
    if (parts.length !== 3) throw new Error(`bad piece record: ${record}`);
    const cell = Number(parts[0]);
    if (!Number.isInteger(cell) || cell < 1 || cell > 36) {
      throw new Error(`bad cell in record: ${record}`);
    }
    return { cell, shape: parts[1], color: parts[2] };
  });
}

// Cells are labeled 1..36 row-major from the top-left.
export function cellToRowCol(cell: number): { row: number; col: number } {
  return { row: Math.floor((cell - 1) / 6) + 1, col: ((cell - 1) % 6) + 1 };
}

export function moveRequest(cell: number, bucket: number): string {
  const { row, col } = cellToRowCol(cell);
  return `MOVE ${row} ${col} ${bucket}`;
}
