#![allow(dead_code)]

use elastonet::netlist::Code;
use proptest::prelude::*;

/// A small valid circuit that the negative cases below break one line at a
/// time.
pub const BASE: &str = "\
supply VS r gnd 3k
resistor R1 r a 100Meg
dea D1 a gnd
dea D2 a gnd
des S1 a gnd coupled=D1
";

/// One broken input per diagnostic code: (code, source, offending line).
pub fn negative_cases() -> Vec<(Code, Vec<u8>, usize)> {
    let with = |extra: &str| format!("{BASE}{extra}\n").into_bytes();
    let cases = vec![
        (Code::InvalidUtf8, [BASE.as_bytes(), b"# \xff\xfe\n"].concat(), 6),
        (Code::BadUnit, with("resistor R2 r a 10Q"), 6),
        (Code::UnitMismatch, with("resistor R2 r a 10V"), 6),
        (Code::Syntax, with("resistor R2 r a"), 6),
        (Code::UnknownStatement, with("capacitor C1 a gnd 1n"), 6),
        (Code::BadIdentifier, with("resistor 2R r a 1k"), 6),
        (Code::UnknownKey, with("dea D3 a gnd color=red"), 6),
        (Code::DuplicateKey, with("dea D3 a gnd tau=1 tau=2"), 6),
        (Code::BadValue, with("dea D3 a gnd tau=fast"), 6),
        (Code::DuplicateName, with("resistor R1 r a 1Meg"), 6),
        (
            Code::NoGround,
            b"supply VS r x 3k\nresistor R1 r a 1Meg\nresistor R2 a x 1Meg\ndea D1 a x\n".to_vec(),
            1,
        ),
        (Code::NoSupply, Vec::new(), 1),
        (Code::DanglingNode, with("resistor R2 a z 1Meg"), 6),
        (
            Code::Disconnected,
            with("resistor R2 x y 1Meg\nresistor R3 x y 2Meg"),
            6,
        ),
        (Code::ShortedElement, with("resistor R2 a a 1Meg"), 6),
        (Code::MissingCoupling, with("des S2 a gnd"), 6),
        (Code::UnknownCoupling, with("des S2 a gnd coupled=DEA9"), 6),
        (Code::UnknownDea, with("foot F1 D1 DX"), 6),
        (Code::FootSameDea, with("foot F1 D1 D1"), 6),
        (Code::InvalidParameter, with("des S2 a gnd coupled=D2 ron=2e12"), 6),
    ];
    cases
}

const KEYWORDS: &[&str] = &["supply", "resistor", "dea", "des", "foot", "param", "SUPPLY", "Dea"];
const SUFFIXES: &[&str] = &[
    "", "p", "n", "u", "m", "k", "Meg", "G", "V", "ohm", "F", "s", "kV", "MEGohm",
];

/// Token soup that looks like netlist text: mostly plausible, often wrong.
pub fn netlist_like_text() -> impl Strategy<Value = String> {
    let token = prop_oneof![
        prop::sample::select(KEYWORDS).prop_map(str::to_string),
        "[A-Za-z_][A-Za-z0-9_]{0,6}",
        (-1e6f64..1e6, prop::sample::select(SUFFIXES)).prop_map(|(v, s)| format!("{v}{s}")),
        "[a-z]{1,6}=[A-Za-z0-9.]{0,6}",
        Just("#".to_string()),
        Just("=".to_string()),
        "\\PC{0,3}",
    ];
    let line = prop::collection::vec(token, 0..8).prop_map(|t| t.join(" "));
    prop::collection::vec(line, 0..12).prop_map(|l| l.join("\n"))
}

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z_][A-Za-z0-9_]{0,7}"
}

fn node() -> impl Strategy<Value = String> {
    prop_oneof![Just("gnd".to_string()), "[a-z0-9_]{1,6}"]
}

/// Positive values over many decades, as the printer must render them.
fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        (1e-13f64..1e13),
        (0u32..1000).prop_map(f64::from),
        (-12i32..12, 1u32..1000).prop_map(|(e, m)| f64::from(m) * 10f64.powi(e)),
    ]
}

/// Syntactically valid netlist text (semantics not guaranteed).
pub fn valid_netlist_text() -> impl Strategy<Value = String> {
    let supply = (
        ident(),
        node(),
        node(),
        value(),
        prop::sample::select(&["", "V", "kV"][..]),
    )
        .prop_map(|(n, a, b, v, u)| {
            if u == "kV" {
                format!("supply {n} {a} {b} {}kV", v / 1e3)
            } else {
                format!("supply {n} {a} {b} {v}{u}")
            }
        });
    let resistor = (ident(), node(), node(), value()).prop_map(|(n, a, b, v)| format!("RESISTOR {n} {a}  {b} {v}ohm"));
    let dea = (
        ident(),
        node(),
        node(),
        prop::option::of(value()),
        prop::option::of(value()),
    )
        .prop_map(|(n, a, b, c, t)| {
            let mut s = format!("dea {n} {a} {b}");
            if let Some(c) = c {
                s += &format!(" cref={c}F");
            }
            if let Some(t) = t {
                s += &format!(" tau={t}s");
            }
            s
        });
    let des = (ident(), node(), node(), ident(), prop::option::of(value())).prop_map(|(n, a, b, c, r)| {
        let mut s = format!("des {n} {a} {b} coupled={c}");
        if let Some(r) = r {
            s += &format!(" ron={r}");
        }
        s
    });
    let foot = (
        ident(),
        ident(),
        ident(),
        prop::option::of(prop::sample::select(&["fwd", "rev"][..])),
    )
        .prop_map(|(n, l, r, o)| match o {
            Some(o) => format!("foot {n} {l} {r} orient={o}"),
            None => format!("foot {n} {l} {r}"),
        });
    let param = value().prop_map(|v| format!("param dea.tau={v} des.threshold={v}"));
    let comment = Just("# comment".to_string());
    let stmt = prop_oneof![supply, resistor, dea, des, foot, param, comment];
    prop::collection::vec(stmt, 0..16).prop_map(|l| l.join("\r\n"))
}
