//! Synthetic corpora with lognormal citation counts.
//!
//! Every paper has a single author from a single country. Citations are drawn
//! as `round(exp(mu + sigma·z))` with `z` standard normal.
//!
//! The generator is pinned: ChaCha8 from `rand_chacha` seeded with
//! `seed_from_u64(seed)`, one ChaCha stream per population (stream 0 for the
//! rest of the world, stream `i + 1` for subunit `i`), and normals from
//! `rand_distr::StandardNormal` (ziggurat). A given seed therefore produces
//! the same corpus on every platform and run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorAffiliation, Corpus, CountryCode, Publication, UnitDefinition};
use crate::error::{Error, Result};

/// Country code given to papers outside every subunit.
pub const REST_OF_WORLD: &str = "ZZ";

pub const DEFAULT_YEAR: i32 = 2014;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalSpec {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

impl LognormalSpec {
    pub fn new(mu: f64, sigma: f64, n: usize) -> Self {
        LognormalSpec { mu, sigma, n }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::Synth(format!("{what}: mu must be finite")));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Synth(format!("{what}: sigma must be positive")));
        }
        if self.n == 0 {
            return Err(Error::Synth(format!("{what}: n must be at least 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subunit {
    pub country: CountryCode,
    pub spec: LognormalSpec,
}

/// A world population split into subunits and a rest-of-world remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorld {
    /// Parameters for the rest of the world; `n` is the total world size.
    pub world: LognormalSpec,
    pub subunits: Vec<Subunit>,
    pub seed: u64,
    pub year: i32,
}

/// The pinned generator for `seed`, positioned on `stream`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_citations(spec: &LognormalSpec, rng: &mut ChaCha8Rng) -> u64 {
    let z: f64 = StandardNormal.sample(rng);
    (spec.mu + spec.sigma * z).exp().round() as u64
}

impl SyntheticWorld {
    pub fn new(world: LognormalSpec, seed: u64) -> Self {
        SyntheticWorld {
            world,
            subunits: Vec::new(),
            seed,
            year: DEFAULT_YEAR,
        }
    }

    pub fn with_subunit(mut self, country: &str, spec: LognormalSpec) -> Self {
        self.subunits.push(Subunit {
            country: country.parse().expect("valid country code"),
            spec,
        });
        self
    }

    fn rest_count(&self) -> Result<usize> {
        self.world.validate("world")?;
        let mut taken = 0usize;
        for (i, s) in self.subunits.iter().enumerate() {
            s.spec
                .validate(&format!("subunit {} ({})", i + 1, s.country))?;
            taken += s.spec.n;
        }
        self.world.n.checked_sub(taken).ok_or_else(|| {
            Error::Synth(format!(
                "subunits request {taken} papers but the world has only {}",
                self.world.n
            ))
        })
    }

    pub fn generate(&self) -> Result<Corpus> {
        let rest = self.rest_count()?;
        let rest_code: CountryCode = REST_OF_WORLD.parse()?;
        let mut publications = Vec::with_capacity(self.world.n);
        let mut push = |country: &CountryCode, citations: u64| {
            publications.push(Publication {
                id: format!("S{:08}", publications.len() + 1),
                year: self.year,
                citations,
                authors: vec![AuthorAffiliation::new([country.clone()])],
                tags: Default::default(),
            });
        };
        for (i, s) in self.subunits.iter().enumerate() {
            let mut rng = seeded_rng(self.seed, i as u64 + 1);
            for _ in 0..s.spec.n {
                push(&s.country, draw_citations(&s.spec, &mut rng));
            }
        }
        let mut rng = seeded_rng(self.seed, 0);
        for _ in 0..rest {
            push(&rest_code, draw_citations(&self.world, &mut rng));
        }
        Ok(Corpus::new(publications)?
            .with_provenance("generator", "chacha8+standard-normal lognormal")
            .with_provenance("seed", self.seed.to_string()))
    }

    /// One single-country unit per subunit plus the rest of the world.
    pub fn units(&self) -> Vec<UnitDefinition> {
        let mut units: Vec<UnitDefinition> = self
            .subunits
            .iter()
            .map(|s| UnitDefinition::new(s.country.as_str(), [s.country.clone()]))
            .collect();
        units.push(UnitDefinition::country(REST_OF_WORLD));
        units
    }
}

pub fn generate_corpus(
    world: LognormalSpec,
    subunits: &[(LognormalSpec, &str)],
    seed: u64,
) -> Result<Corpus> {
    let mut w = SyntheticWorld::new(world, seed);
    for &(spec, country) in subunits {
        w.subunits.push(Subunit {
            country: country.parse()?,
            spec,
        });
    }
    w.generate()
}
