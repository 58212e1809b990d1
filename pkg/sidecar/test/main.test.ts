// End-to-end checks against the built entry point (npm test compiles
// first). Covers the stdio transport and the TCP flag path.

import { afterEach, describe, expect, test } from 'vitest';
import { spawn, ChildProcess } from 'node:child_process';
import { existsSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import * as net from 'node:net';
import { once } from 'node:events';
import { encodePngGray } from '../src/png.js';

const MAIN = fileURLToPath(new URL('../dist/main.js', import.meta.url));

const children: ChildProcess[] = [];

afterEach(() => {
  for (const child of children.splice(0)) child.kill('SIGKILL');
});

function start(args: string[]): ChildProcess {
  if (!existsSync(MAIN)) {
    throw new Error('dist/main.js missing; run "npm run build" first');
  }
  const child = spawn(process.execPath, [MAIN, ...args], { stdio: ['pipe', 'pipe', 'pipe'] });
  children.push(child);
  return child;
}

function readLine(stream: NodeJS.ReadableStream, timeoutMs = 8000): Promise<string> {
  return new Promise((resolve, reject) => {
    let buf = '';
    const timer = setTimeout(() => reject(new Error(`no line within ${timeoutMs}ms: ${buf}`)), timeoutMs);
    const onData = (chunk: Buffer) => {
      buf += chunk.toString('utf8');
      const nl = buf.indexOf('\n');
      if (nl >= 0) {
        clearTimeout(timer);
        stream.off('data', onData);
        resolve(buf.slice(0, nl));
      }
    };
    stream.on('data', onData);
  });
}

const IMAGE = encodePngGray({
  width: 6,
  height: 4,
  pixels: new Uint8Array([...Array(24).keys()].map((i) => i * 10)),
}).toString('base64');

describe('stdio transport', () => {
  test('echo round trips and malformed lines get quoted errors', async () => {
    const child = start(['--addr', 'stdio', '--echo-only']);
    expect(await readLine(child.stderr!)).toContain('serving on stdio');

    child.stdin!.write(JSON.stringify({ id: 'q1', op: 'echo', image: IMAGE }) + '\n');
    const first = JSON.parse(await readLine(child.stdout!));
    expect(first).toEqual({ id: 'q1', ok: true, image: IMAGE });

    child.stdin!.write('this is not json\n');
    const second = JSON.parse(await readLine(child.stdout!));
    expect(second.ok).toBe(false);
    expect(second.error).toContain('this is not json');

    child.stdin!.write(JSON.stringify({ id: 'q2', op: 'restore', image: IMAGE }) + '\n');
    const third = JSON.parse(await readLine(child.stdout!));
    expect(third.ok).toBe(false);
    expect(third.error).toContain('echo-only');
  }, 15000);
});

describe('tcp transport', () => {
  test('serves on the advertised ephemeral port', async () => {
    const child = start(['--addr', 'tcp://127.0.0.1:0']);
    const banner = await readLine(child.stderr!);
    const match = banner.match(/listening on 127\.0\.0\.1:(\d+)/);
    expect(match).not.toBeNull();
    const port = Number(match![1]);

    const sock = net.connect(port, '127.0.0.1');
    await once(sock, 'connect');
    sock.write(JSON.stringify({ id: 't1', op: 'echo', image: IMAGE }) + '\n');
    const resp = JSON.parse(await readLine(sock));
    sock.destroy();
    expect(resp).toEqual({ id: 't1', ok: true, image: IMAGE });
  }, 15000);

  test('rejects --model together with --echo-only', async () => {
    const child = start(['--echo-only', '--model', 'x.js']);
    const line = await readLine(child.stderr!);
    expect(line).toContain('--model conflicts with --echo-only');
    const code = await new Promise((resolve) => child.on('exit', resolve));
    expect(code).toBe(1);
  }, 15000);
});
