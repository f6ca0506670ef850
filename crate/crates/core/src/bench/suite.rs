//! The synthetic benchmark suite.

use std::fmt::Write;
use std::path::Path;

use crate::preprocess::{format_targets, TargetPoint};

/// Bytes checked by the nested-magic programs, outermost first.
pub const MAGIC: [u8; 8] = [68, 73, 70, 85, 90, 90, 33, 63];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteProgram {
    pub name: String,
    /// `(file name, source)` pairs.
    pub files: Vec<(String, String)>,
    pub targets: Vec<TargetPoint>,
}

fn line_of(src: &str, needle: &str) -> u32 {
    src.lines().position(|l| l.contains(needle)).expect("marker present") as u32 + 1
}

fn single(name: &str, target: &str, src: String, marker: &str, timeout_s: f64) -> SuiteProgram {
    let line = line_of(&src, marker);
    SuiteProgram {
        name: name.into(),
        targets: vec![TargetPoint { id: target.into(), file: "main.mp".into(), line, timeout_s }],
        files: vec![("main.mp".into(), src)],
    }
}

/// (a) one byte guards the panic.
pub fn shallow() -> SuiteProgram {
    let src = "func main() {\n    if input(0) == 77 {\n        panic(\"shallow\")\n    }\n}\n".to_string();
    single("a_shallow", "a1", src, "panic(", 60.0)
}

/// (b) `k` nested byte comparisons against [`MAGIC`] guard the panic.
pub fn nested_magic(k: usize) -> SuiteProgram {
    assert!((1..=MAGIC.len()).contains(&k));
    let mut src = String::from("func main() {\n");
    for (i, m) in MAGIC.iter().take(k).enumerate() {
        writeln!(src, "{}if input({i}) == {m} {{", "    ".repeat(i + 1)).unwrap();
    }
    writeln!(src, "{}panic(\"magic\")", "    ".repeat(k + 1)).unwrap();
    for i in (0..k).rev() {
        writeln!(src, "{}}}", "    ".repeat(i + 1)).unwrap();
    }
    src.push_str("}\n");
    single(&format!("b_magic{k}"), &format!("b{k}"), src, "panic(", 300.0)
}

/// (c) the panic needs a branch inside a loop to be taken exactly five times.
pub fn counter() -> SuiteProgram {
    let src = "\
func main() {
    i = 0
    hits = 0
    while i < input_len() && i < 64 {
        if input(i) == 200 {
            hits = hits + 1
        }
        i = i + 1
    }
    if hits == 5 {
        panic(\"counted\")
    }
}
"
    .to_string();
    single("c_counter", "c1", src, "panic(", 300.0)
}

fn distractor(name: &str, salt: u32) -> String {
    format!(
        "\
func {name}(start) {{
    i = start
    acc = 0
    while i < input_len() && i < start + 12 {{
        b = input(i)
        if b < {lo} {{
            acc = acc + 1
        }} else {{
            if b < {mid} {{
                acc = acc + 2
            }} else {{
                if b < {hi} {{
                    acc = acc * 3
                }} else {{
                    acc = acc - 1
                }}
            }}
        }}
        i = i + 1
    }}
    if acc > {cap} {{
        print(acc)
    }}
    return acc
}}
",
        lo = 40 + salt * 7,
        mid = 110 + salt * 5,
        hi = 190 + salt * 3,
        cap = 20 + salt,
    )
}

/// (d) the panic sits three calls below `main`, next to wide sibling
/// functions that offer plenty of unrelated coverage. One sibling holds a
/// decoy panic that is not a target.
pub fn deep_call() -> SuiteProgram {
    let siblings = ["scan_a", "scan_b", "scan_c", "scan_d", "scan_e", "scan_f"];
    let mut main = String::from("func main() {\n    op = input(0)\n");
    for (i, s) in siblings.iter().enumerate() {
        writeln!(main, "    if op == {} {{\n        r = {s}(1)\n    }}", i + 1).unwrap();
    }
    main.push_str("    if op == 2 && input(1) == 13 {\n        panic(\"decoy\")\n    }\n");
    main.push_str("    if op == 9 {\n        stage_one(input(1), input(2), input(3))\n    }\n}\n");
    let stages = "\
func stage_one(a, b, c) {
    if a == 101 {
        stage_two(b, c)
    }
}
func stage_two(b, c) {
    if b == 202 {
        stage_three(c)
    }
}
func stage_three(c) {
    if c == 33 {
        panic(\"deep\")
    }
}
";
    let mut src = main;
    src.push_str(stages);
    for (i, s) in siblings.iter().enumerate() {
        src.push_str(&distractor(s, i as u32));
    }
    single("d_deep_call", "d1", src, "panic(\"deep\")", 300.0)
}

/// (e) the panic is in a function nothing calls.
pub fn dead_code() -> SuiteProgram {
    let src = "\
func main() {
    x = input(0)
    if x == 1 {
        print(\"one\")
    }
}
func never(v) {
    if v == 3 {
        panic(\"dead\")
    }
}
"
    .to_string();
    single("e_dead_code", "e1", src, "panic(", 2.0)
}

pub fn suite() -> Vec<SuiteProgram> {
    vec![shallow(), nested_magic(2), nested_magic(4), nested_magic(8), counter(), deep_call(), dead_code()]
}

pub fn find(name: &str) -> Option<SuiteProgram> {
    suite().into_iter().find(|p| p.name == name)
}

/// Write one program as `dir/<name>/{*.mp, targets.tsv}`.
pub fn write_program(dir: &Path, p: &SuiteProgram) -> std::io::Result<()> {
    let d = dir.join(&p.name);
    std::fs::create_dir_all(&d)?;
    for (f, src) in &p.files {
        std::fs::write(d.join(f), src)?;
    }
    std::fs::write(d.join("targets.tsv"), format_targets(&p.targets))
}

pub const BENCH_TOML_HEADER: &str = "\
trials = 10
jobs = 1
rng_seed_base = 1
modes = [\"directed\", \"coverage\"]
step_limit = 100000

[schedule]
t_exploit_s = 0.2
";

/// Write every program plus a `bench.toml` that lists them.
pub fn write_suite(dir: &Path) -> std::io::Result<Vec<SuiteProgram>> {
    let programs = suite();
    let mut toml = String::from(BENCH_TOML_HEADER);
    for p in &programs {
        write_program(dir, p)?;
        write!(toml, "\n[[program]]\nname = \"{0}\"\nsource = \"{0}\"\ntargets = \"{0}/targets.tsv\"\n", p.name).unwrap();
    }
    std::fs::write(dir.join("bench.toml"), toml)?;
    Ok(programs)
}
