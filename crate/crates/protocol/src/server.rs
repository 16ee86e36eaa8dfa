use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use serde_json::json;

use crate::session::{Session, SessionDefaults};

pub const DEFAULT_MAX_SESSIONS: usize = 64;

/// Run one session over a line stream until `close` or end of input.
pub fn serve_stream<R: BufRead, W: Write>(mut reader: R, mut writer: W, defaults: SessionDefaults) -> io::Result<()> {
    let mut session = Session::new(defaults);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        let reply = match std::str::from_utf8(&buf) {
            Ok(line) if line.trim().is_empty() => continue,
            Ok(line) => session.handle_line(line.trim_end()),
            Err(_) => crate::session::Reply {
                line: json!({"ok": false, "error": "request is not valid UTF-8"}).to_string(),
                close: false,
            },
        };
        writer.write_all(reply.line.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if reply.close {
            return Ok(());
        }
    }
}

pub fn serve_stdio(defaults: SessionDefaults) -> io::Result<()> {
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve_stream(stdin.lock(), BufWriter::new(stdout.lock()), defaults)
}

pub fn bind_tcp(addr: impl ToSocketAddrs) -> io::Result<TcpListener> {
    TcpListener::bind(addr)
}

/// Accept connections forever, one thread and one session per connection.
/// Connections beyond `max_sessions` receive an error line and are closed.
pub fn serve_listener(listener: TcpListener, defaults: SessionDefaults, max_sessions: usize) -> io::Result<()> {
    let active = Arc::new(AtomicUsize::new(0));
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(_) => continue,
        };
        if active.fetch_add(1, Ordering::SeqCst) >= max_sessions {
            active.fetch_sub(1, Ordering::SeqCst);
            let _ = reject(stream);
            continue;
        }
        let active = Arc::clone(&active);
        let defaults = defaults.clone();
        thread::spawn(move || {
            let _ = serve_connection(stream, defaults);
            active.fetch_sub(1, Ordering::SeqCst);
        });
    }
    Ok(())
}

fn serve_connection(stream: TcpStream, defaults: SessionDefaults) -> io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_stream(reader, BufWriter::new(stream), defaults)
}

fn reject(mut stream: TcpStream) -> io::Result<()> {
    let line = json!({"ok": false, "error": "server busy"}).to_string();
    stream.write_all(line.as_bytes())?;
    stream.write_all(b"\n")
}
