// Wire protocol: one JSON object per line, request and response matched
// by id. The peer client lives in the Python package (gencom.sidecar).

export const DEFAULT_PORT = 9473;
export const MAX_LINE_BYTES = 32 * 1024 * 1024;

export const OPS = ['restore', 'clip_sim', 'niqe', 'echo'] as const;
export type Op = (typeof OPS)[number];

export interface SidecarRequest {
  id: string;
  op: Op;
  image?: string; // base64 PNG
  image_b?: string; // base64 PNG, second operand of clip_sim
  params: Record<string, unknown>;
}

export interface SidecarResponse {
  id: string;
  ok: boolean;
  image?: string;
  score?: number;
  error?: string;
}

export class ProtocolError extends Error {
  // id recovered from the offending request, '' when unparseable
  readonly requestId: string;

  constructor(message: string, requestId = '') {
    super(message);
    this.requestId = requestId;
  }
}

function quoteLine(line: string): string {
  const shown = line.length > 200 ? line.slice(0, 200) + '...' : line;
  return `"${shown}"`;
}

export function parseRequest(line: string): SidecarRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new ProtocolError(`malformed JSON: ${quoteLine(line)}`);
  }
  if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
    throw new ProtocolError(`request must be a JSON object: ${quoteLine(line)}`);
  }
  const msg = raw as Record<string, unknown>;
  const id = typeof msg.id === 'string' ? msg.id : '';
  if (!id) {
    throw new ProtocolError(`request id must be a non-empty string: ${quoteLine(line)}`);
  }
  if (typeof msg.op !== 'string' || !(OPS as readonly string[]).includes(msg.op)) {
    throw new ProtocolError(`unknown op ${JSON.stringify(msg.op ?? null)}, expected one of: ${OPS.join(', ')}`, id);
  }
  if (msg.image !== undefined && typeof msg.image !== 'string') {
    throw new ProtocolError('image must be a base64 string', id);
  }
  if (msg.image_b !== undefined && typeof msg.image_b !== 'string') {
    throw new ProtocolError('image_b must be a base64 string', id);
  }
  if (msg.params !== undefined && (typeof msg.params !== 'object' || msg.params === null || Array.isArray(msg.params))) {
    throw new ProtocolError('params must be an object', id);
  }
  return {
    id,
    op: msg.op as Op,
    image: msg.image as string | undefined,
    image_b: msg.image_b as string | undefined,
    params: (msg.params as Record<string, unknown> | undefined) ?? {},
  };
}

export type Address = { kind: 'tcp'; host: string; port: number } | { kind: 'stdio' };

export function parseAddr(address: string): Address {
  if (address === 'stdio' || address === '-') return { kind: 'stdio' };
  const rest = address.startsWith('tcp://') ? address.slice('tcp://'.length) : address;
  if (rest.includes(':')) {
    const i = rest.lastIndexOf(':');
    const host = rest.slice(0, i) || '127.0.0.1';
    const port = Number(rest.slice(i + 1));
    if (!Number.isInteger(port) || port < 0 || port > 65535) {
      throw new ProtocolError(`bad port in address: ${address}`);
    }
    return { kind: 'tcp', host, port };
  }
  return { kind: 'tcp', host: rest, port: DEFAULT_PORT };
}

export type LineEvent =
  | { kind: 'line'; text: string }
  | { kind: 'oversize'; limit: number };

/** Splits a byte stream into newline-delimited lines. A line longer than
 * maxBytes is reported once as oversize and its bytes are discarded, so a
 * huge or runaway payload cannot buffer unboundedly. */
export class LineSplitter {
  private pending: Buffer = Buffer.alloc(0);
  private dropping = false;

  constructor(readonly maxBytes: number = MAX_LINE_BYTES) {}

  push(chunk: Buffer): LineEvent[] {
    const events: LineEvent[] = [];
    let data = this.pending.length ? Buffer.concat([this.pending, chunk]) : chunk;
    for (;;) {
      const nl = data.indexOf(0x0a);
      if (nl < 0) break;
      const head = data.subarray(0, nl);
      data = data.subarray(nl + 1);
      if (this.dropping) {
        // tail of a line that was already reported as oversize
        this.dropping = false;
        continue;
      }
      if (head.length > this.maxBytes) {
        events.push({ kind: 'oversize', limit: this.maxBytes });
        continue;
      }
      const text = head.toString('utf8').replace(/\r$/, '');
      if (text.trim().length > 0) events.push({ kind: 'line', text });
    }
    if (this.dropping) {
      data = data.subarray(data.length);
    } else if (data.length > this.maxBytes) {
      events.push({ kind: 'oversize', limit: this.maxBytes });
      this.dropping = true;
      data = data.subarray(data.length);
    }
    // copy so a small leftover does not pin the incoming chunk
    this.pending = data.length ? Buffer.from(data) : Buffer.alloc(0);
    return events;
  }
}
