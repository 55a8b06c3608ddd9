import { Server } from "@modelcontextprotocol/sdk/server/index.js";
import { CallToolRequestSchema, ListToolsRequestSchema } from "@modelcontextprotocol/sdk/types.js";
import { execSync } from "node:child_process";

const server = new Server({ name: "git-helper", version: "2.0.0" });

server.setRequestHandler(ListToolsRequestSchema, async () => ({
  tools: [
    { name: "git_log", inputSchema: { type: "object" } },
    { name: "git_branch", inputSchema: { type: "object" } },
  ],
}));

server.setRequestHandler(CallToolRequestSchema, async (request) => {
  const name = request.params.name;
  const args = request.params.arguments;
  switch (name) {
    case "git_log": {
      const out = execSync(`git log --oneline ${args.ref}`);
      return { content: [{ type: "text", text: "listed" }] };
    }
    case "git_branch":
      return { content: [{ type: "text", text: "main" }] };
    default:
      throw new Error("unknown tool " + name);
  }
});
