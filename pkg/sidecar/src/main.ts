#!/usr/bin/env node
// Entry point. Logs go to stderr because stdout can be the transport.

import { parseArgs } from 'node:util';
import { parseAddr } from './protocol.js';
import { Backends, builtinBackends, echoOnlyBackends, loadModelBackends } from './backends.js';
import { createTcpServer, serveStdio } from './server.js';

const USAGE = `usage: gencom-sidecar [--addr ADDR] [--echo-only] [--model PATH]

  --addr ADDR   tcp://HOST:PORT, HOST:PORT, :PORT, HOST, or "stdio"
                (default tcp://127.0.0.1:9473)
  --echo-only   serve only the echo op; restore/clip_sim/niqe refuse
  --model PATH  JS module exporting restore/clipSim/niqe overrides
`;

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      addr: { type: 'string', default: 'tcp://127.0.0.1:9473' },
      'echo-only': { type: 'boolean', default: false },
      model: { type: 'string' },
      help: { type: 'boolean', default: false },
    },
  });
  if (values.help) {
    process.stderr.write(USAGE);
    return;
  }
  if (values.model !== undefined && values['echo-only']) {
    throw new Error('--model conflicts with --echo-only');
  }
  let backends: Backends = values['echo-only'] ? echoOnlyBackends : builtinBackends;
  if (values.model !== undefined) {
    backends = await loadModelBackends(values.model);
  }

  const addr = parseAddr(values.addr!);
  if (addr.kind === 'stdio') {
    serveStdio({ backends });
    process.stderr.write('sidecar serving on stdio\n');
    return;
  }
  const server = createTcpServer({ backends });
  server.listen(addr.port, addr.host, () => {
    const bound = server.address();
    const shown = bound && typeof bound === 'object' ? `${bound.address}:${bound.port}` : String(bound);
    process.stderr.write(`sidecar listening on ${shown}\n`);
  });
  const shutdown = () => {
    server.close(() => process.exit(0));
  };
  process.on('SIGINT', shutdown);
  process.on('SIGTERM', shutdown);
}

main().catch((err) => {
  process.stderr.write(`${err instanceof Error ? err.message : String(err)}\n`);
  process.exit(1);
});
