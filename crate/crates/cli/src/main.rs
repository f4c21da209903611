// SPDX-License-Identifier: Apache-2.0

use clap::Parser;

fn main() {
    let cli = vmfg_cli::Cli::parse();
    let code = vmfg_cli::run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
