from .ast import CLIENT, VENDOR, FuncDef, Program
from .callgraph import CallGraph, build_call_graph
from .parser import MiniCSyntaxError, ResolveError, parse
from .printer import print_program

__all__ = ["CLIENT", "VENDOR", "FuncDef", "Program", "CallGraph", "build_call_graph",
           "MiniCSyntaxError", "ResolveError", "parse", "print_program"]
