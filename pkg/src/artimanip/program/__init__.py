from .ast import SKILLS, Program
from .codegen import CodegenError, OfflineCodegen, RemoteCodegen, canned_program, generate_program
from .fuzz import random_program
from .interpreter import ExecutionTrace, SkillRuntime, TraceEntry, interpret
from .parser import ParseError, check_program, parse_program, tokenize
from .printer import print_expr, print_program
