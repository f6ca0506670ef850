"""Smoke test for the difuzz Python module."""

import difuzz

SOURCE = """\
func main() {
    if input(0) == 7 {
        if input(1) == 42 {
            panic("reached")
        }
    }
    print("ok")
}
"""


def main():
    program = difuzz.Program.parse(SOURCE)
    assert program.function_names() == ["main"]
    assert program.run(b"\x00")["stdout"] == "ok\n"
    assert program.run(bytes([7, 42]))["status"] == "panic"

    graphs = program.graphs()
    dot = graphs.callgraph_dot()
    assert difuzz.normalize_dot(dot) == dot
    assert len(graphs.cfg_dots()) == 1

    ets = graphs.ets("t1\tmain.mp:4\t5\n")
    assert len(ets) > 0
    assert max(b["weight"] for b in ets.blocks()) == 1.0
    assert difuzz.Ets.from_toml(ets.to_toml()).to_toml() == ets.to_toml()

    inst = difuzz.instrument_program(program, ets)
    assert "InstrumentETS" in inst.source()
    run = inst.run(bytes([7, 42]))
    assert run["status"] == "panic" and run["line"] == 4
    assert len(run["guards"]) >= 3

    a = inst.fuzz(ets, timeout_s=5.0, rng_seed=3, exec_clock=100000.0)
    b = inst.fuzz(ets, timeout_s=5.0, rng_seed=3, exec_clock=100000.0)
    assert a == b
    assert a["tte_s"] is not None
    assert bytes(a["crash_input"])[:2] == bytes([7, 42])

    cell = difuzz.tte_cell([1.0, 2.0, None])
    assert cell["text"] == "1.0 | 1.5 (33.3% TO)", cell["text"]
    print("smoke test passed")


if __name__ == "__main__":
    main()
