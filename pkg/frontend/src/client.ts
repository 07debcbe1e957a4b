// WebSocket wrapper: hands binary frames and JSON control messages to the
// model, queues edits while disconnected (up to a cap, then drops with a
// banner callback).

import { ClientMessage, ServerMessage } from './protocol.js';

export const OFFLINE_QUEUE_LIMIT = 100;

export interface Transport {
  send(data: string): void;
  readonly readyState: number; // 1 = OPEN, as in WebSocket
}

export class StudioClient {
  private queue: ClientMessage[] = [];
  dropped = 0;

  constructor(
    private transport: Transport | null,
    private readonly onDrop: (dropped: number) => void = () => {},
  ) {}

  attach(transport: Transport): void {
    this.transport = transport;
    this.flush();
  }

  detach(): void {
    this.transport = null;
  }

  get connected(): boolean {
    return this.transport !== null && this.transport.readyState === 1;
  }

  send(msg: ClientMessage): boolean {
    if (this.connected) {
      this.transport!.send(JSON.stringify(msg));
      return true;
    }
    if (this.queue.length >= OFFLINE_QUEUE_LIMIT) {
      this.dropped += 1;
      this.onDrop(this.dropped);
      return false;
    }
    this.queue.push(msg);
    return true;
  }

  flush(): void {
    while (this.queue.length && this.connected) {
      this.transport!.send(JSON.stringify(this.queue.shift()!));
    }
  }

  queuedCount(): number {
    return this.queue.length;
  }
}

export function parseServerJson(text: string): ServerMessage {
  const msg = JSON.parse(text) as ServerMessage;
  if (!msg || typeof msg !== 'object' || !('kind' in msg)) {
    throw new Error('malformed server message');
  }
  return msg;
}
