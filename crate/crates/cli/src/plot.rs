//! Companion matplotlib scripts. The CLI never plots itself; it writes a
//! script that reads the CSV it just produced.

use std::path::Path;

use crate::Command;

fn body(command: Command) -> &'static str {
    match command {
        Command::MiCurve => {
            r#"rows = [r for r in rows if r["mi_bits"] != "inf"]
plt.plot([int(r["delta"]) for r in rows], [float(r["mi_bits"]) for r in rows], marker="o")
plt.xlabel("age")
plt.ylabel("mutual information (bits)")
"#
        }
        Command::Solve => {
            r#"plt.bar([r["y"] for r in rows], [int(r["wait"]) for r in rows])
plt.xlabel("previous service time y")
plt.ylabel("wait Z(y)")
plt.title("beta = " + rows[0]["beta"])
"#
        }
        Command::Sweep => {
            r#"x_name = reader.fieldnames[0]
x = [float(r[x_name]) for r in rows]
plt.plot(x, [float(r["i_opt"]) for r in rows], marker="o", label="optimal")
plt.plot(x, [float(r["i_zero_wait"]) for r in rows], marker="s", label="zero-wait")
plt.errorbar(x, [float(r["i_uniform_mean"]) for r in rows],
             yerr=[3 * float(r["i_uniform_stderr"]) for r in rows], marker="^", label="uniform")
plt.xlabel(x_name)
plt.ylabel("time-average mutual information (bits)")
plt.legend()
"#
        }
        Command::Simulate => {
            r#"names = sorted({r["policy"] for r in rows})
for i, name in enumerate(names):
    ys = [float(r["time_average"]) for r in rows if r["policy"] == name]
    plt.scatter([i] * len(ys), ys, label=name)
plt.xticks(range(len(names)), names)
plt.ylabel("time average")
"#
        }
        Command::Trace => {
            r#"n = [int(r["n"]) for r in rows]
plt.step(n, [int(r["delta"]) for r in rows], where="post", label="age")
for r in rows:
    if "deliver" in r["event"]:
        plt.axvline(int(r["n"]), color="grey", linewidth=0.5)
plt.xlabel("n")
plt.ylabel("age")
plt.legend()
"#
        }
        Command::OracleCheck => {
            r#"dev = [max(float(r["deviation"]), 1e-18) for r in rows]
plt.semilogy(range(len(dev)), dev, marker="o")
plt.axhline(1e-8, color="red", linestyle="--")
plt.xlabel("instance")
plt.ylabel("|solver - oracle|")
"#
        }
    }
}

pub fn script(command: Command, csv_path: &Path) -> String {
    let csv = csv_path.display().to_string().replace('\\', "\\\\").replace('"', "\\\"");
    let png = csv_path.with_extension("png").display().to_string().replace('\\', "\\\\").replace('"', "\\\"");
    format!(
        r#"import csv

import matplotlib.pyplot as plt

with open("{csv}", newline="") as f:
    reader = csv.DictReader(f)
    rows = list(reader)

{}plt.tight_layout()
plt.savefig("{png}")
"#,
        body(command)
    )
}
