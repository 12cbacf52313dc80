//! Parsing, rendering and comparing values.

use zoea::values::{matches_with_wildcards, parse_value};

fn main() {
    // Quotes are optional for simple strings.
    let v = parse_value("[fred, 'wilma flintstone', 3.50, {age: 42}]").unwrap();
    println!("canonical: {}", v.render());
    println!("class:     {}", v.type_class().name());

    let a = parse_value("4").unwrap();
    let b = parse_value("4.0").unwrap();
    println!("4 == 4.0:  {}", a == b);

    let expected = parse_value("[1, _, 3]").unwrap();
    for actual in ["[1, 2, 3]", "[1, [9, 9], 3]", "[1, 2]"] {
        let ok = matches_with_wildcards(&expected, &parse_value(actual).unwrap());
        println!("{} ~ {actual}: {ok}", expected.render());
    }
}
