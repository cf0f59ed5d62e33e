// Transports deliver one response line per request line, strictly in
// order. The session layer never has more than one request in flight.

export interface LineSocket {
  send(text: string): void;
  onMessage(cb: (text: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

export interface Transport {
  request(line: string): Promise<string>;
  close(): void;
}

export class QueueTransport implements Transport {
  private pending: Array<{
    resolve: (line: string) => void;
    reject: (err: Error) => void;
  }> = [];
  private closed = false;

  constructor(private socket: LineSocket) {
    socket.onMessage((text) => {
      const waiter = this.pending.shift();
      if (waiter) waiter.resolve(text);
    });
    socket.onClose(() => {
      this.closed = true;
      for (const waiter of this.pending.splice(0)) {
        waiter.reject(new Error('connection closed'));
      }
    });
  }

  request(line: string): Promise<string> {
    if (this.closed) return Promise.reject(new Error('connection closed'));
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.socket.send(line);
    });
  }

  close(): void {
    this.closed = true;
    this.socket.close();
  }
}

// Adapter for the browser WebSocket API.
export function browserSocket(ws: WebSocket): LineSocket {
  return {
    send: (text) => ws.send(text),
    onMessage: (cb) => {
      ws.addEventListener('message', (ev) => cb(String(ev.data)));
    },
    onClose: (cb) => {
      ws.addEventListener('close', () => cb());
      ws.addEventListener('error', () => cb());
    },
    close: () => ws.close(),
  };
}

export function connectBrowser(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    ws.addEventListener('open', () => resolve(new QueueTransport(browserSocket(ws))));
    ws.addEventListener('error', () => reject(new Error(`cannot reach ${url}`)));
  });
}
