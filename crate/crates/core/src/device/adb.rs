//! Real-device adapter over a device-bridge CLI.
//!
//! Command lines issued, with `-s <serial>` prepended when a serial is
//! configured:
//!
//! - screenshot: `adb exec-out screencap -p`
//! - tap:        `adb shell input tap <x> <y>`
//! - text:       `adb shell input text <escaped>` (spaces become `%s`)
//! - scroll:     `adb shell input swipe <x1> <y1> <x2> <y2> 300`
//! - back:       `adb shell input keyevent 4`
//! - logs:       `adb logcat -d -v time -T <timestamp>`
//!
//! Excluded from desk-scale acceptance; covered by fake-transcript tests
//! that assert these exact argument vectors.

use chrono::{DateTime, Utc};
use std::process::Command;

use super::{DeviceBackend, DeviceError, DeviceInfo};
use crate::geometry::{BoundingBox, Direction, Point};
use crate::raster::RasterImage;

pub struct CommandOutput {
    pub status: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

/// Subprocess seam so tests can capture exact command transcripts.
pub trait CommandRunner {
    fn run(&mut self, program: &str, args: &[String]) -> Result<CommandOutput, DeviceError>;
}

pub struct SubprocessRunner;

impl CommandRunner for SubprocessRunner {
    fn run(&mut self, program: &str, args: &[String]) -> Result<CommandOutput, DeviceError> {
        let out = Command::new(program)
            .args(args)
            .output()
            .map_err(|e| DeviceError::Unreachable(format!("{program}: {e}")))?;
        Ok(CommandOutput {
            status: out.status.code().unwrap_or(-1),
            stdout: out.stdout,
            stderr: out.stderr,
        })
    }
}

pub struct AdbBackend<R: CommandRunner> {
    runner: R,
    program: String,
    serial: Option<String>,
    app_id: String,
    swipe_ms: u32,
    screen: BoundingBox,
}

impl<R: CommandRunner> AdbBackend<R> {
    pub fn new(runner: R, serial: Option<String>, app_id: impl Into<String>) -> Self {
        AdbBackend {
            runner,
            program: "adb".to_string(),
            serial,
            app_id: app_id.into(),
            swipe_ms: 300,
            screen: BoundingBox::new(0, 0, 720, 1280),
        }
    }

    pub fn with_screen(mut self, screen: BoundingBox) -> Self {
        self.screen = screen;
        self
    }

    fn argv(&self, tail: &[&str]) -> Vec<String> {
        let mut args = Vec::new();
        if let Some(serial) = &self.serial {
            args.push("-s".to_string());
            args.push(serial.clone());
        }
        args.extend(tail.iter().map(|s| s.to_string()));
        args
    }

    fn run_ok(&mut self, tail: &[&str]) -> Result<CommandOutput, DeviceError> {
        let args = self.argv(tail);
        let out = self.runner.run(&self.program, &args)?;
        if out.status != 0 {
            return Err(DeviceError::CommandFailed {
                program: format!("{} {}", self.program, args.join(" ")),
                status: out.status,
                stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
            });
        }
        Ok(out)
    }

    fn escape_text(text: &str) -> String {
        // The shell `input text` command cannot carry raw spaces.
        text.replace(' ', "%s")
    }
}

impl<R: CommandRunner> DeviceBackend for AdbBackend<R> {
    fn screenshot(&mut self) -> Result<RasterImage, DeviceError> {
        let out = self.run_ok(&["exec-out", "screencap", "-p"])?;
        decode_png_bytes(&out.stdout)
    }

    fn tap(&mut self, point: Point) -> Result<(), DeviceError> {
        let (x, y) = (point.x.to_string(), point.y.to_string());
        self.run_ok(&["shell", "input", "tap", &x, &y])?;
        Ok(())
    }

    fn input_text(&mut self, text: &str) -> Result<(), DeviceError> {
        let escaped = Self::escape_text(text);
        self.run_ok(&["shell", "input", "text", &escaped])?;
        Ok(())
    }

    fn scroll(
        &mut self,
        direction: Direction,
        region: Option<BoundingBox>,
    ) -> Result<(), DeviceError> {
        let r = region.unwrap_or(self.screen);
        let cx = r.x + r.w / 2;
        let cy = r.y + r.h / 2;
        let dx = r.w * 2 / 5;
        let dy = r.h * 2 / 5;
        // The swipe drags content opposite to the direction being revealed:
        // scrolling down means the finger moves up.
        let (x1, y1, x2, y2) = match direction {
            Direction::Down => (cx, cy + dy, cx, cy - dy),
            Direction::Up => (cx, cy - dy, cx, cy + dy),
            Direction::Right => (cx + dx, cy, cx - dx, cy),
            Direction::Left => (cx - dx, cy, cx + dx, cy),
        };
        let parts = [
            x1.to_string(),
            y1.to_string(),
            x2.to_string(),
            y2.to_string(),
            self.swipe_ms.to_string(),
        ];
        self.run_ok(&[
            "shell", "input", "swipe", &parts[0], &parts[1], &parts[2], &parts[3], &parts[4],
        ])?;
        Ok(())
    }

    fn back(&mut self) -> Result<(), DeviceError> {
        self.run_ok(&["shell", "input", "keyevent", "4"])?;
        Ok(())
    }

    fn read_log_since(&mut self, since: DateTime<Utc>) -> Result<Vec<String>, DeviceError> {
        let ts = since.format("%m-%d %H:%M:%S%.3f").to_string();
        let out = self.run_ok(&["logcat", "-d", "-v", "time", "-T", &ts])?;
        Ok(String::from_utf8_lossy(&out.stdout)
            .lines()
            .map(str::to_string)
            .collect())
    }

    fn info(&self) -> DeviceInfo {
        DeviceInfo {
            device: self
                .serial
                .clone()
                .unwrap_or_else(|| "adb default device".to_string()),
            app_id: self.app_id.clone(),
            app_info: String::new(),
        }
    }
}

fn decode_png_bytes(bytes: &[u8]) -> Result<RasterImage, DeviceError> {
    // screencap -p emits PNG on stdout.
    RasterImage::decode_png_bytes(bytes).map_err(|e| DeviceError::Screenshot(e.to_string()))
}
