"""Random well-formed scripts for sandbox property tests."""
import random

INTS = ["a", "b", "c", "d"]
STRS = ["s", "t"]
LISTS = ["xs", "ys"]
FUNCS = ["f", "g"]


class ScriptGen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.ints: set[str] = set()
        self.strs: set[str] = set()
        self.lists: set[str] = set()
        self.funcs: set[str] = set()

    def int_expr(self, depth=0) -> str:
        r = self.rng
        options = [str(r.randint(0, 9))]
        if self.ints:
            options.append(r.choice(sorted(self.ints)))
        if self.lists:
            options.append(f"len({r.choice(sorted(self.lists))})")
        if self.funcs and depth < 2:
            options.append(f"{r.choice(sorted(self.funcs))}({self.int_expr(depth + 1)})")
        if depth < 2:
            op = r.choice(["+", "-", "*", "%"])
            right = str(r.randint(1, 7)) if op in "*%" else self.int_expr(depth + 1)
            options.append(f"({self.int_expr(depth + 1)} {op} {right})")
        return r.choice(options)

    def str_expr(self) -> str:
        r = self.rng
        options = ['"' + r.choice(["x", "yz", "", "q r"]) + '"', f"str({self.int_expr(1)})"]
        if self.strs:
            options.append(r.choice(sorted(self.strs)) + " + " + '"!"')
        return r.choice(options)

    def cond(self) -> str:
        op = self.rng.choice(["<", ">", "==", "!=", "<=", ">="])
        return f"{self.int_expr(1)} {op} {self.int_expr(1)}"

    def statement(self, nested=False) -> list[str]:
        r = self.rng
        kind = r.choice(["int", "int", "str", "list", "print", "print", "if", "for", "def", "while"])
        if nested and kind in ("def", "if", "for", "while"):
            kind = "print"
        if kind == "int":
            name = r.choice(INTS)
            line = f"{name} = {self.int_expr()}"
            if not nested:
                self.ints.add(name)
            elif name not in self.ints:
                return [f"print({self.int_expr()})"]
            return [line]
        if kind == "str":
            name = r.choice(STRS)
            if nested and name not in self.strs:
                return [f"print({self.str_expr()})"]
            line = f"{name} = {self.str_expr()}"
            self.strs.add(name)
            return [line]
        if kind == "list":
            if self.lists and r.random() < 0.6:
                return [f"append({r.choice(sorted(self.lists))}, {self.int_expr()})"]
            if nested:
                return [f"print([{self.int_expr(1)}, {self.int_expr(1)}])"]
            name = r.choice(LISTS)
            line = f"{name} = [{self.int_expr(1)}, {self.int_expr(1)}]"
            self.lists.add(name)
            return [line]
        if kind == "print":
            return [f"print({r.choice([self.int_expr(), self.str_expr()])})"]
        if kind == "if":
            lines = [f"if {self.cond()} {{"] + ["  " + x for x in self.statement(True)]
            if r.random() < 0.5:
                lines += ["} else {"] + ["  " + x for x in self.statement(True)]
            return lines + ["}"]
        if kind == "for":
            body = self.statement(True)
            return [f"for k in range({r.randint(0, 4)}) {{"] + ["  " + x for x in body] + ["}"]
        if kind == "while":
            name = "w"
            return [f"{name} = 0", f"while {name} < {r.randint(0, 3)} {{", f"  {name} = {name} + 1",
                    *("  " + x for x in self.statement(True)), "}"]
        name = r.choice(FUNCS)
        body = f"  return x * {r.randint(1, 3)} + {r.randint(0, 5)}"
        self.funcs.add(name)
        return [f"def {name}(x) {{", body, "}"]

    def script(self, n: int) -> str:
        lines = []
        for _ in range(n):
            lines.extend(self.statement())
        return "\n".join(lines)


def script_pair(seed: int) -> tuple[str, str]:
    rng = random.Random(seed)
    gen = ScriptGen(rng)
    return gen.script(rng.randint(1, 6)), gen.script(rng.randint(1, 6))
