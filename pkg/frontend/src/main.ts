// Entry point: connect to the game service, start an episode, and wire
// drag-and-drop to MOVE requests. The server address defaults to the
// page's host and can be overridden with ?server=host:port.

import { GameSession } from './session.js';
import { connectBrowser } from './transport.js';
import { BoardView, Meta } from './view.js';

async function start(): Promise<void> {
  const root = document.getElementById('app')!;
  const banner = document.getElementById('banner')!;
  const params = new URLSearchParams(window.location.search);
  const server = params.get('server') ?? window.location.host;

  const showError = (message: string) => {
    banner.textContent = `${message} - retry?`;
    banner.style.display = 'block';
    banner.onclick = () => {
      banner.style.display = 'none';
      void start();
    };
  };

  let meta: Meta;
  let session: GameSession;
  try {
    const response = await fetch(`http://${server}/meta`);
    if (!response.ok) throw new Error(`meta request failed: ${response.status}`);
    meta = (await response.json()) as Meta;
    session = new GameSession(await connectBrowser(`ws://${server}/ws`));
  } catch (err) {
    showError(err instanceof Error ? err.message : 'connection failed');
    return;
  }

  const view = new BoardView(
    root,
    meta,
    (cell, bucket) => {
      void session.dragPiece(cell, bucket).then((response) => {
        if (response.status === 'error') showError(response.error!);
        view.render(session);
      });
    },
    () => {
      void session.newEpisode().then((response) => {
        if (response.status === 'error') showError(response.error!);
        view.render(session);
      });
    },
  );

  const first = await session.newEpisode();
  if (first.status === 'error') {
    showError(first.error!);
    return;
  }
  view.render(session);
}

window.addEventListener('DOMContentLoaded', () => void start());
