"""Program sources: canned adaptive templates and a remote chat endpoint."""

from __future__ import annotations

from ..grounding.remote import RemoteClient
from ..grounding.types import GroundingError
from ..scene.objects import canonical_category, load_templates
from .parser import ParseError, parse_program

PULL_CAP = 6  # pull attempts become certain after this many rotations
ARC_CATEGORIES = ("coffee_machine", "window", "door", "lamp")
MAX_REPAIRS = 2

TEMPLATE = """\
# Turn until a {motion} attempt succeeds; attempts grow likelier with each turn.
let n = 0
let done = false
grasp(part)
while not done {{
  {rotate}()
  n = n + 1
  if rand() * {cap} < n {{
    done = {motion}()
  }}
}}
while {motion}() {{
}}
"""

GRAMMAR = """\
program = { stmt } ;
stmt    = "let" NAME "=" expr | NAME "=" expr | call
        | "while" expr block | "if" expr block [ "else" ( block | if ) ] ;
block   = "{" { stmt } "}" ;
expr    = and { "or" and } ;  and = not { "and" not } ;  not = "not" not | cmp ;
cmp     = sum [ ( "<" | "<=" | ">" | ">=" | "==" | "!=" ) sum ] ;
sum     = term { ( "+" | "-" ) term } ;  term = unary { "*" unary } ;
unary   = "-" unary | atom ;
atom    = INT | "true" | "false" | NAME | call | "(" expr ")" ;
call    = NAME "(" [ expr { "," expr } ] ")" ;
builtins: grasp(part) pull_part() push_part() rotate_cw() rotate_ccw()
          move_arc_pos() move_arc_neg() release() rand() min(a, b) max(a, b)
"""

PROMPT = (
    "Write a program in the language below that makes a robot complete the task. "
    "Skill calls return true on success. Parts may be locked by a hidden mechanism "
    "that a number of rotations releases, so loop: rotate, and attempt the opening "
    "motion with a probability that grows with the number of rotations; once it "
    "succeeds keep repeating it until it fails. Reply with the program only.\n"
    "Task: {goal} the {category}.\nGrammar:\n{grammar}"
)


class CodegenError(RuntimeError):
    pass


def canned_program(category: str, unlock_direction: str | None = None, cap: int = PULL_CAP) -> str:
    cat = canonical_category(category)
    if unlock_direction is None:
        unlock_direction = load_templates()[cat]["unlock_direction"].strip()
    motion = "move_arc_pos" if cat in ARC_CATEGORIES else "pull_part"
    return TEMPLATE.format(rotate=f"rotate_{unlock_direction}", motion=motion, cap=cap)


class OfflineCodegen:
    def __call__(self, task: dict) -> str:
        return canned_program(task["category"], task.get("unlock_direction"))


class RemoteCodegen:
    """Chat-style endpoint: stage ``codegen``, reply ``{"text": source}``."""

    def __init__(self, client: RemoteClient, repairs: int = MAX_REPAIRS):
        self.client = client
        self.repairs = repairs

    def __call__(self, task: dict) -> str:
        messages = [{"role": "user", "content": PROMPT.format(goal=task.get("goal", "open"), category=task["category"], grammar=GRAMMAR)}]
        last = None
        for _ in range(self.repairs + 1):
            try:
                reply = self.client.request("codegen", {"messages": messages})
            except GroundingError as exc:
                raise CodegenError(str(exc)) from None
            text = reply.get("text")
            if not isinstance(text, str):
                last = "reply carries no program text"
                messages.append({"role": "user", "content": last})
                continue
            try:
                parse_program(text)
                return text
            except ParseError as exc:
                last = str(exc)
                messages.append({"role": "assistant", "content": text})
                messages.append({"role": "user", "content": f"The program does not parse: {exc}. Reply with a corrected program."})
        raise CodegenError(f"generated program still invalid after {self.repairs} repairs: {last}")


def generate_program(provider, task: dict) -> str:
    return provider(task)
