import { Server } from "@modelcontextprotocol/sdk/server/index.js";
import { CallToolRequestSchema, ListToolsRequestSchema } from "@modelcontextprotocol/sdk/types.js";
import { execSync } from "child_process";

const server = new Server({ name: "mapget", version: "0.2.0" }, { capabilities: { tools: {} } });

function runGrep(args: any): string {
  const out = execSync("grep -r " + args.pattern + " .");
  return out.toString();
}

function runWc(args: any): string {
  return execSync(`wc -l ${args.file}`).toString();
}

const table = new Map([
  ["grep_tree", runGrep],
  ["count_lines", runWc],
]);

server.setRequestHandler(ListToolsRequestSchema, async () => ({
  tools: [
    { name: "grep_tree", inputSchema: { type: "object" } },
    { name: "count_lines", inputSchema: { type: "object" } },
  ],
}));

server.setRequestHandler(CallToolRequestSchema, async (request) => {
  const fn = table.get(request.params.name);
  const text = fn(request.params.arguments);
  return { content: [{ type: "text", text }] };
});
