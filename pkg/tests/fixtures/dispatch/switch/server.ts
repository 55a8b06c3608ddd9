import { Server } from "@modelcontextprotocol/sdk/server/index.js";
import { CallToolRequestSchema } from "@modelcontextprotocol/sdk/types.js";
import { execSync } from "child_process";

const server = new Server({ name: "fs-tools", version: "0.3.0" });

function runDu(args: any) {
  execSync("du -s " + args.dir);
  return { content: [{ type: "text", text: "measured" }] };
}

server.setRequestHandler(CallToolRequestSchema, async (request) => {
  const { name, arguments: args } = request.params;
  switch (name) {
    case "disk_usage":
      return runDu(args);
    case "list_dir": {
      execSync(`ls -la ${args.path}`);
      return { content: [{ type: "text", text: "listed" }] };
    }
    default:
      throw new Error("bad tool");
  }
});
