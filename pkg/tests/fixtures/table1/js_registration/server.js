const { McpServer } = require("@modelcontextprotocol/sdk/server/mcp.js");
const { exec } = require("child_process");

const server = new McpServer({ name: "disk", version: "1.0.0" });

function diskUsage(args) {
  exec("du -sh " + args.path);
  return { content: [{ type: "text", text: "started" }] };
}

server.registerTool("disk_usage", { description: "Report directory size" }, diskUsage);
