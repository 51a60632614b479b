"""Lark grammars for the configuration (.conf) and statechart (.fsm) formats."""

from functools import lru_cache

from lark import Lark

# Names are lexed loosely (dots and colons allowed, as in event names);
# the semantic passes check the stricter id patterns.
CONF_GRAMMAR = r"""
start: "ConfiguratorConf" "{" (entry ","?)* "}"

entry: NAME "=" configuration

configuration: "Configuration" "{" (item ("," item)* ","?)? "}"

?item: prespec
     | postspec
     | change

prespec: "pre_conf_state" "=" statelist
postspec: "post_conf_state" "=" statelist

statelist: "{" (state_entry ("," state_entry)* ","?)? "}"

state_entry: STRING             -> state_string
           | NAME "=" STRING    -> state_pair

change: NAME "(" STRING ("," value)* ")"

value: "true"                           -> true
     | "false"                          -> false
     | NUMBER                           -> number
     | STRING                           -> string
     | "{" value ("," value)* ","? "}"  -> array

NAME: /[A-Za-z_][A-Za-z0-9_.:]*/
NUMBER: /[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?/
STRING: /"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*'/
COMMENT: /--[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

FSM_GRAMMAR = r"""
start: "fsm" NAME "{" member* "}"

?member: initial_decl
       | state_decl
       | transition_decl
       | entry_decl
       | exit_decl
       | after_decl

initial_decl: "initial" NAME ";"
state_decl: "state" NAME "{" member* "}"
transition_decl: "transition" NAME "->" NAME "on" NAME ";"
entry_decl: "entry" "raise" raise_list ";"
exit_decl: "exit" "raise" raise_list ";"
after_decl: "after" INT "raise" raise_list ";"

raise_list: raise_item ("," raise_item)*
raise_item: NAME call?
call: "(" CALL_ARGS? ")"

NAME: /[A-Za-z_][A-Za-z0-9_.:]*/
INT: /\d+/
CALL_ARGS: /[^()]+/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""


@lru_cache(maxsize=None)
def conf_parser() -> Lark:
    """Shared LALR parser for .conf files."""
    return Lark(CONF_GRAMMAR, parser="lalr", lexer="contextual")


@lru_cache(maxsize=None)
def fsm_parser() -> Lark:
    """Shared LALR parser for .fsm files."""
    return Lark(FSM_GRAMMAR, parser="lalr", lexer="contextual")
