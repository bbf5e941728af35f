/** Executable entry point: `node dist/main.js render --csv ... --kind ... --out ...` */

import { runCli } from "./cli.js";

process.exit(runCli(process.argv.slice(2)));
