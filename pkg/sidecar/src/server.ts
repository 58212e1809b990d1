// Serves the line-delimited JSON protocol over TCP or a stream pair.
// Requests on one connection are handled independently; each produces
// exactly one response line, in completion order rather than arrival
// order.

import * as net from 'node:net';
import type { Readable, Writable } from 'node:stream';
import {
  LineSplitter,
  MAX_LINE_BYTES,
  ProtocolError,
  SidecarRequest,
  SidecarResponse,
  parseRequest,
} from './protocol.js';
import { decodePng, encodePngGray, toGray, GrayImage } from './png.js';
import type { Backends } from './backends.js';

export interface ServerOptions {
  backends: Backends;
  maxLineBytes?: number;
}

function decodeImage(b64: string): GrayImage {
  return toGray(decodePng(Buffer.from(b64, 'base64')));
}

function requireImage(req: SidecarRequest): string {
  if (req.image === undefined) {
    throw new ProtocolError(`op ${req.op} requires an image`, req.id);
  }
  return req.image;
}

export async function handleRequest(req: SidecarRequest, backends: Backends): Promise<SidecarResponse> {
  try {
    switch (req.op) {
      case 'echo':
        // opaque round trip, the payload is not even decoded
        return { id: req.id, ok: true, image: requireImage(req) };
      case 'restore': {
        const img = decodeImage(requireImage(req));
        const out = await backends.restore(img, req.params);
        return { id: req.id, ok: true, image: encodePngGray(out).toString('base64') };
      }
      case 'clip_sim': {
        const a = decodeImage(requireImage(req));
        const b = req.image_b === undefined ? null : decodeImage(req.image_b);
        const score = await backends.clipSim(a, b, req.params);
        return { id: req.id, ok: true, score };
      }
      case 'niqe': {
        const score = await backends.niqe(decodeImage(requireImage(req)), req.params);
        return { id: req.id, ok: true, score };
      }
    }
  } catch (err) {
    return { id: req.id, ok: false, error: err instanceof Error ? err.message : String(err) };
  }
}

export function attachConnection(input: Readable, output: Writable, opts: ServerOptions): void {
  const limit = opts.maxLineBytes ?? MAX_LINE_BYTES;
  const splitter = new LineSplitter(limit);
  const send = (resp: SidecarResponse) => {
    if (!output.writableEnded && !output.destroyed) {
      output.write(JSON.stringify(resp) + '\n');
    }
  };
  input.on('data', (chunk: Buffer) => {
    for (const event of splitter.push(chunk)) {
      if (event.kind === 'oversize') {
        send({ id: '', ok: false, error: `line exceeds the ${event.limit} byte limit` });
        continue;
      }
      let req: SidecarRequest;
      try {
        req = parseRequest(event.text);
      } catch (err) {
        const id = err instanceof ProtocolError ? err.requestId : '';
        send({ id, ok: false, error: err instanceof Error ? err.message : String(err) });
        continue;
      }
      void handleRequest(req, opts.backends).then(send);
    }
  });
  input.on('error', () => {});
}

export function createTcpServer(opts: ServerOptions): net.Server {
  return net.createServer((sock) => {
    sock.on('error', () => {});
    attachConnection(sock, sock, opts);
  });
}

export function serveStdio(opts: ServerOptions): void {
  attachConnection(process.stdin, process.stdout, opts);
}
