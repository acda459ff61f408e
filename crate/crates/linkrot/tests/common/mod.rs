//! Shared fixture server and independent numeric oracles for the
//! integration suites. The oracles deliberately avoid the library's
//! own special-function code: quadrature, closed forms, and a
//! third-party sampler are the reference, the library is the subject.

#![allow(dead_code)]

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use linkrot::GammaModel;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpListener;

#[derive(Debug, Clone)]
pub struct Route {
    pub status: u16,
    pub content_type: &'static str,
    pub body: String,
    pub delay_ms: u64,
    pub hang: bool,
}

impl Route {
    pub fn html(body: impl Into<String>) -> Self {
        Route {
            status: 200,
            content_type: "text/html; charset=utf-8",
            body: body.into(),
            delay_ms: 0,
            hang: false,
        }
    }

    pub fn asset(content_type: &'static str) -> Self {
        Route {
            status: 200,
            content_type,
            body: String::new(),
            delay_ms: 0,
            hang: false,
        }
    }

    pub fn status(status: u16) -> Self {
        Route {
            status,
            content_type: "text/plain",
            body: String::new(),
            delay_ms: 0,
            hang: false,
        }
    }

    pub fn slow(content_type: &'static str, delay_ms: u64) -> Self {
        Route {
            status: 200,
            content_type,
            body: String::new(),
            delay_ms,
            hang: false,
        }
    }

    /// Accepts the request and never answers, for timeout probes.
    pub fn hang() -> Self {
        Route {
            status: 200,
            content_type: "text/plain",
            body: String::new(),
            delay_ms: 0,
            hang: true,
        }
    }
}

#[derive(Default)]
struct Counters {
    hits: HashMap<(String, String), u64>,
    active: HashMap<String, u64>,
    peak: HashMap<String, u64>,
}

/// Plain-HTTP server routing on (Host header, path). Counts every
/// request per route and tracks the per-host concurrency high-water
/// mark. TLS handshake bytes get the connection dropped, so https
/// attempts against it fail fast.
pub struct FixtureServer {
    pub addr: SocketAddr,
    counters: Arc<Mutex<Counters>>,
}

impl FixtureServer {
    pub async fn start(routes: Vec<((&str, &str), Route)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let counters = Arc::new(Mutex::new(Counters::default()));
        let table: Arc<HashMap<(String, String), Route>> = Arc::new(
            routes
                .into_iter()
                .map(|((host, path), route)| ((host.to_string(), path.to_string()), route))
                .collect(),
        );
        let shared = counters.clone();
        tokio::spawn(async move {
            loop {
                let Ok((sock, _)) = listener.accept().await else {
                    break;
                };
                tokio::spawn(handle(sock, table.clone(), shared.clone()));
            }
        });
        FixtureServer { addr, counters }
    }

    pub fn hits(&self, host: &str, path: &str) -> u64 {
        let counters = self.counters.lock().unwrap();
        *counters
            .hits
            .get(&(host.to_string(), path.to_string()))
            .unwrap_or(&0)
    }

    pub fn total_hits(&self) -> u64 {
        self.counters.lock().unwrap().hits.values().sum()
    }

    pub fn host_hits(&self, host: &str) -> u64 {
        let counters = self.counters.lock().unwrap();
        counters
            .hits
            .iter()
            .filter(|((h, _), _)| h == host)
            .map(|(_, n)| *n)
            .sum()
    }

    /// Highest number of simultaneously in-flight requests seen for
    /// the host.
    pub fn peak_concurrency(&self, host: &str) -> u64 {
        let counters = self.counters.lock().unwrap();
        *counters.peak.get(host).unwrap_or(&0)
    }

    pub fn snapshot_hits(&self) -> HashMap<(String, String), u64> {
        self.counters.lock().unwrap().hits.clone()
    }
}

async fn handle(
    mut sock: tokio::net::TcpStream,
    table: Arc<HashMap<(String, String), Route>>,
    counters: Arc<Mutex<Counters>>,
) {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 2048];
    while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
        match sock.read(&mut chunk).await {
            Ok(0) | Err(_) => break,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
        }
        if buf.first() == Some(&0x16) {
            return;
        }
    }
    let text = String::from_utf8_lossy(&buf);
    let path = text
        .lines()
        .next()
        .and_then(|line| line.split_whitespace().nth(1))
        .unwrap_or("/")
        .to_string();
    let host = text
        .lines()
        .find_map(|line| line.strip_prefix("Host: "))
        .unwrap_or("")
        .split(':')
        .next()
        .unwrap_or("")
        .to_string();

    {
        let mut c = counters.lock().unwrap();
        *c.hits.entry((host.clone(), path.clone())).or_default() += 1;
        let active = c.active.entry(host.clone()).or_default();
        *active += 1;
        let now = *active;
        let peak = c.peak.entry(host.clone()).or_default();
        *peak = (*peak).max(now);
    }

    // The in-flight count drops right before the response goes out:
    // a polite client cannot start its next request until it has read
    // a response, so the count can never trail behind new arrivals.
    let done = || {
        let mut c = counters.lock().unwrap();
        if let Some(active) = c.active.get_mut(&host) {
            *active = active.saturating_sub(1);
        }
    };
    let route = table.get(&(host.clone(), path)).cloned();
    match route {
        Some(route) if route.hang => {
            tokio::time::sleep(std::time::Duration::from_secs(300)).await;
            done();
        }
        Some(route) => {
            if route.delay_ms > 0 {
                tokio::time::sleep(std::time::Duration::from_millis(route.delay_ms)).await;
            }
            done();
            let _ = sock.write_all(response_text(&route).as_bytes()).await;
        }
        None => {
            done();
            let _ = sock
                .write_all(response_text(&Route::status(404)).as_bytes())
                .await;
        }
    }
}

fn response_text(route: &Route) -> String {
    let reason = match route.status {
        200 => "OK",
        301 => "Moved Permanently",
        302 => "Found",
        304 => "Not Modified",
        404 => "Not Found",
        410 => "Gone",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    format!(
        "HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        route.status,
        reason,
        route.content_type,
        route.body.len(),
        route.body
    )
}

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Adaptive Simpson quadrature with Richardson acceptance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn refine(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        refine(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + refine(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    if lo >= hi {
        return 0.0;
    }
    let fa = f(lo);
    let fb = f(hi);
    let (whole, m, fm) = simpson(f, lo, fa, hi, fb);
    refine(f, lo, fa, hi, fb, whole, m, fm, tol, 60)
}

/// ∫₀^hi pdf(x) dx by quadrature, with the stretch next to zero
/// summed as a series because the integrand is singular there for
/// shape < 1. The normalization constant is read off the pdf itself
/// at x = θ, so this checks the library's constant against exact
/// integration rather than assuming it.
pub fn pdf_mass_below(model: &GammaModel, hi: f64) -> f64 {
    let shape = model.shape;
    let scale = model.scale;
    if hi <= 0.0 {
        return 0.0;
    }
    let norm = model.pdf(scale).unwrap() * std::f64::consts::E / scale.powf(shape - 1.0);
    let eps = (scale * 1e-3).min(hi);
    // ∫₀^ε x^{k−1} e^{−x/θ} dx = Σ_n (−1)^n ε^{k+n} / (θ^n n! (k+n))
    let mut head = 0.0_f64;
    let mut sign = 1.0_f64;
    let mut factorial = 1.0_f64;
    for n in 0..40u32 {
        if n > 0 {
            factorial *= f64::from(n);
            sign = -sign;
        }
        let term =
            sign * eps.powf(shape + f64::from(n)) / (scale.powi(n as i32) * factorial * (shape + f64::from(n)));
        head += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    let tail = adaptive_simpson(&|x| model.pdf(x).unwrap(), eps, hi, 1e-12);
    norm * head + tail
}

/// Upper tail mass by quadrature, complementing [`pdf_mass_below`].
pub fn pdf_mass_above(model: &GammaModel, lo: f64) -> f64 {
    1.0 - pdf_mass_below(model, lo)
}

pub fn harmonic(n: u64) -> f64 {
    (1..=n).map(|j| 1.0 / j as f64).sum()
}

/// ψ(n) = −γ + H_{n−1} for integer n ≥ 1.
pub fn digamma_integer(n: u64) -> f64 {
    assert!(n >= 1);
    -EULER_GAMMA + harmonic(n - 1)
}

/// ψ(1/2) = −γ − 2 ln 2.
pub fn digamma_half() -> f64 {
    -EULER_GAMMA - 2.0 * std::f64::consts::LN_2
}

/// Seeded draws from a third-party gamma sampler, the fit oracle.
pub fn gamma_draws(shape: f64, scale: f64, n: usize, seed: u64) -> Vec<f64> {
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dist = rand_distr::Gamma::new(shape, scale).unwrap();
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}
