"""Command Modules"""

from subfinsler.cli.commands import body, check, flow, graph, synthesize, wulff

COMMANDS = (body, wulff, graph, flow, synthesize, check)
