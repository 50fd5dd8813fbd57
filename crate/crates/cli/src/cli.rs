use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use vtforge::engine::{analyze_render, read_wav, render_offline, write_wav, Engine, EngineConfig};
use vtforge::gesture::{load_trajectory, ActivationTrajectory, CalibrationMap, DeviceSimulator};

use crate::messages::StateMessage;
use crate::server::{self, ServeOptions};

#[derive(Debug, Parser)]
#[command(
    name = "vtforge",
    version,
    about = "Force-controlled articulatory voice synthesizer"
)]
pub struct Cli {
    /// Tongue model file replacing the built-in mesh.
    #[arg(long, global = true, value_name = "PATH")]
    pub tongue_model: Option<PathBuf>,
    /// Tract outline file replacing the built-in outline.
    #[arg(long, global = true, value_name = "PATH")]
    pub tract: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render an activation trajectory to a WAV file.
    Render {
        #[arg(long, value_name = "FILE")]
        traj: PathBuf,
        #[arg(long, value_name = "WAV")]
        out: PathBuf,
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Also write one JSON state message per control tick.
        #[arg(long, value_name = "FILE")]
        states: Option<PathBuf>,
    },
    /// Print level, pitch and formants of a WAV file.
    Analyze {
        #[arg(long = "in", value_name = "WAV")]
        input: PathBuf,
    },
    /// Run the live engine behind HTTP and WebSocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Built UI to serve at `/`.
        #[arg(long, value_name = "DIR")]
        ui_dir: Option<PathBuf>,
    },
    /// Forward a sensor stream to a running server.
    Listen {
        #[arg(long, value_name = "DEVICE")]
        serial: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Forwarding rate, Hz.
        #[arg(long, default_value_t = 100.0)]
        rate: f64,
    },
    /// Write the sensor lines a device would send for a trajectory.
    Simulate {
        #[arg(long, value_name = "FILE")]
        traj: PathBuf,
        /// Defaults to standard output.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Frames per second.
        #[arg(long, default_value_t = 100.0)]
        rate: f64,
        /// Pace output like the real device.
        #[arg(long)]
        realtime: bool,
    },
}

/// Parses, runs and maps the outcome to an exit code: 0 success, 2 usage,
/// 1 anything else.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn load_config(cli: &Cli, path: Option<&Path>) -> anyhow::Result<EngineConfig> {
    let mut cfg = EngineConfig::load(path)?;
    if let Some(p) = &cli.tongue_model {
        cfg.tongue_model = Some(p.clone());
    }
    if let Some(p) = &cli.tract {
        cfg.tract = Some(p.clone());
    }
    Ok(cfg)
}

fn read_trajectory(path: &Path) -> anyhow::Result<ActivationTrajectory> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_trajectory(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn runtime() -> anyhow::Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Render {
            traj,
            out,
            config,
            states,
        } => {
            let cfg = load_config(&cli, config.as_deref())?;
            let traj = read_trajectory(traj)?;
            let (buf, snaps) = render_offline(&traj, &cfg)?;
            write_wav(&buf, out)?;
            if let Some(p) = states {
                let mut w = BufWriter::new(File::create(p)?);
                for s in &snaps {
                    serde_json::to_writer(&mut w, &StateMessage::from(s))?;
                    w.write_all(b"\n")?;
                }
                w.flush()?;
            }
            log::info!(
                "{} samples, rms {:.5}, peak {:.5}",
                buf.samples.len(),
                buf.rms(),
                buf.peak()
            );
        }
        Command::Analyze { input } => {
            let buf = read_wav(input)?;
            print!("{}", analyze_render(&buf)?);
        }
        Command::Serve {
            port,
            host,
            config,
            ui_dir,
        } => {
            let mut cfg = load_config(&cli, config.as_deref())?;
            cfg.live = true;
            let engine = Engine::from_config(cfg)?;
            let opts = ServeOptions {
                addr: Some(SocketAddr::new(*host, *port)),
                ui_dir: ui_dir.clone(),
            };
            runtime()?.block_on(async move {
                let server = server::start(engine, opts, None).await?;
                eprintln!("listening on http://{}", server.addr);
                server
                    .run_until(async {
                        if let Err(e) = tokio::signal::ctrl_c().await {
                            log::error!("waiting for ctrl-c: {e}");
                            std::future::pending::<()>().await;
                        }
                    })
                    .await
            })?;
        }
        Command::Listen {
            serial,
            port,
            host,
            rate,
        } => {
            if !(*rate > 0.0) {
                anyhow::bail!("rate must be positive");
            }
            let url = format!("ws://{}/ws", SocketAddr::new(*host, *port));
            let n = runtime()?.block_on(crate::listen::listen(
                serial,
                &url,
                CalibrationMap::default(),
                *rate,
            ))?;
            log::info!("forwarded {n} sensor frames");
        }
        Command::Simulate {
            traj,
            out,
            rate,
            realtime,
        } => {
            if !(*rate > 0.0) {
                anyhow::bail!("rate must be positive");
            }
            let sim = DeviceSimulator::new(read_trajectory(traj)?, *rate);
            match out {
                Some(p) => sim.write_to(
                    File::create(p).with_context(|| format!("creating {}", p.display()))?,
                    *realtime,
                )?,
                None => sim.write_to(std::io::stdout().lock(), *realtime)?,
            };
        }
    }
    Ok(())
}
