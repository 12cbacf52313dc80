//! One program calling another through the registry.

use zoea::cli::{cmd_compile, cmd_run, cmd_show, CliConfig};
use zoea::values::parse_value;

const SOURCE: &str = "
program: sales_tax
  case: 1
    input: 1000
    output: 175
  case: 2
    input: 2000
    output: 350

program: price_including_tax
  use: sales_tax
  input: 1000
  output: 1175
";

fn main() -> std::io::Result<()> {
    let dir = std::env::temp_dir().join(format!("zoea-composition-{}", std::process::id()));
    let file = dir.join("tax.zoea");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&file, SOURCE)?;
    let cfg = CliConfig::new(dir.join("registry"));

    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    let code = cmd_compile(&file, &cfg, &mut out, &mut err);
    println!("compile exit {code}");
    cmd_show("price_including_tax", &cfg, &mut out, &mut err);
    cmd_run("price_including_tax", Some(parse_value("80").unwrap()), &cfg, &mut out, &mut err);

    std::fs::remove_dir_all(&dir)
}
