use std::time::Duration;

use rand::Rng;

use super::ProviderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl RetryPolicy {
    /// Backoff before retry number `retry` (1-based): `base · 2^(retry-1)`
    /// scaled by a jitter factor in `[0.5, 1.5)`.
    fn delay(&self, retry: u32) -> Duration {
        if self.base_delay.is_zero() {
            return Duration::ZERO;
        }
        let exp = self.base_delay.saturating_mul(1 << (retry - 1).min(16));
        exp.mul_f64(rand::thread_rng().gen_range(0.5..1.5))
    }
}

/// Runs `op` until it succeeds, fails permanently, or the retry budget is
/// spent. Returns the value and the number of attempts made.
///
/// `op` receives the 1-based attempt number.
pub fn with_retries<T>(
    policy: &RetryPolicy,
    mut op: impl FnMut(u32) -> Result<T, ProviderError>,
) -> Result<(T, u32), ProviderError> {
    let mut attempt = 1;
    loop {
        match op(attempt) {
            Ok(v) => return Ok((v, attempt)),
            Err(e) if e.is_retryable() && attempt <= policy.max_retries => {
                tracing::warn!(attempt, error = %e, "retrying provider call");
                std::thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
            Err(e) if e.is_retryable() => {
                return Err(ProviderError::Exhausted {
                    attempts: attempt,
                    last: Box::new(e),
                })
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy(max_retries: u32) -> RetryPolicy {
        RetryPolicy {
            max_retries,
            base_delay: Duration::ZERO,
        }
    }

    #[test]
    fn two_timeouts_then_success_takes_three_attempts() {
        let (v, attempts) = with_retries(&policy(3), |a| {
            if a < 3 {
                Err(ProviderError::Timeout)
            } else {
                Ok("ok")
            }
        })
        .unwrap();
        assert_eq!((v, attempts), ("ok", 3));
    }

    #[test]
    fn budget_exhaustion_reports_attempts() {
        let err = with_retries(&policy(2), |_| Err::<(), _>(ProviderError::Timeout)).unwrap_err();
        assert!(matches!(err, ProviderError::Exhausted { attempts: 3, .. }), "{err}");
    }

    #[test]
    fn permanent_errors_are_not_retried() {
        let mut calls = 0;
        let err = with_retries(&policy(5), |_| {
            calls += 1;
            Err::<(), _>(ProviderError::Http {
                status: 400,
                message: "bad".into(),
            })
        })
        .unwrap_err();
        assert_eq!(calls, 1);
        assert!(matches!(err, ProviderError::Http { status: 400, .. }));
    }

    #[test]
    fn backoff_grows_within_jitter_band() {
        let p = RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_millis(100),
        };
        for retry in 1..5u32 {
            let d = p.delay(retry).as_secs_f64();
            let nominal = 0.1 * f64::from(1u32 << (retry - 1));
            assert!(d >= 0.5 * nominal && d < 1.5 * nominal, "retry {retry}: {d}");
        }
    }
}
