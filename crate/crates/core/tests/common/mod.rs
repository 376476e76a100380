#![allow(dead_code)]

use std::collections::BTreeSet;

use ep_index::corpus::{AuthorAffiliation, Corpus, Publication, UnitDefinition};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const COUNTRIES: [&str; 6] = ["US", "DE", "FR", "CH", "SG", "CN"];

/// Country-level P_top10%, P_top1%, e_p, P'_top0.01%, P'_top0.01% per million.
pub const COUNTRY_TABLE: [(&str, f64, f64, f64, f64, f64); 30] = [
    ("Switzerland", 49275.0, 5859.0, 0.119, 82.84, 9.86),
    ("Denmark", 25022.0, 2832.0, 0.113, 36.28, 6.25),
    ("US", 858703.0, 96146.0, 0.112, 1205.33, 3.71),
    ("The Netherlands", 64667.0, 7060.0, 0.109, 84.15, 4.92),
    ("Austria", 17785.0, 1919.0, 0.108, 22.34, 2.54),
    ("Belgium", 29419.0, 3102.0, 0.105, 34.49, 3.03),
    ("Canada", 100307.0, 10474.0, 0.104, 114.20, 3.13),
    ("Norway", 14312.0, 1493.0, 0.104, 16.25, 3.07),
    ("Sweden", 41792.0, 4327.0, 0.104, 46.38, 4.64),
    ("UK", 201588.0, 20855.0, 0.103, 223.20, 3.39),
    ("Finland", 18247.0, 1837.0, 0.101, 18.62, 3.39),
    ("Australia", 58612.0, 5854.0, 0.100, 58.40, 2.40),
    ("New Zealand", 10361.0, 1026.0, 0.099, 10.06, 2.14),
    ("Germany", 159250.0, 15738.0, 0.099, 153.71, 1.86),
    ("Israel", 22266.0, 2180.0, 0.098, 20.90, 2.43),
    ("Poland", 12042.0, 1170.0, 0.097, 11.04, 0.29),
    ("France", 112965.0, 10971.0, 0.097, 103.48, 1.60),
    ("Italy", 74378.0, 7150.0, 0.096, 66.07, 1.09),
    ("South Africa", 7159.0, 661.0, 0.092, 5.64, 0.13),
    ("China", 75537.0, 6827.0, 0.090, 55.77, 0.04),
    ("Greece", 10134.0, 913.0, 0.090, 7.41, 0.64),
    ("Spain", 50797.0, 4526.0, 0.089, 35.93, 0.77),
    ("Russia", 15887.0, 1413.0, 0.089, 11.18, 0.08),
    ("Mexico", 6169.0, 531.0, 0.086, 3.93, 0.04),
    ("Japan", 109249.0, 9371.0, 0.086, 68.95, 0.54),
    ("Brazil", 16025.0, 1309.0, 0.082, 8.73, 0.05),
    ("Korea", 25233.0, 2037.0, 0.081, 13.28, 0.27),
    ("Turkey", 10100.0, 793.0, 0.079, 4.89, 0.07),
    ("Taiwan", 18612.0, 1332.0, 0.072, 6.82, 0.30),
    ("India", 22320.0, 1530.0, 0.069, 7.19, 0.01),
];

/// University-level P_top10%, P_top1%, e_p, P'_top0.01%.
pub const UNIVERSITY_TABLE: [(&str, f64, f64, f64, f64); 19] = [
    ("Stanford University", 976.0, 169.0, 0.173, 5.06),
    (
        "Massachusetts Institute of Technology",
        1175.0,
        184.0,
        0.156,
        4.50,
    ),
    ("University of Cambridge", 801.0, 114.0, 0.142, 2.29),
    (
        "Ecole Polytech Federale de Lausanne",
        581.0,
        80.0,
        0.138,
        1.53,
    ),
    ("ETH Zurich", 678.0, 80.0, 0.118, 1.13),
    ("Delft University of Technology", 395.0, 56.0, 0.141, 1.11),
    ("Imperial College London", 598.0, 70.0, 0.117, 0.95),
    ("Technical University of Denmark", 382.0, 47.0, 0.123, 0.70),
    ("University Paris XI-Paris-Sud", 314.0, 38.0, 0.121, 0.56),
    (
        "University Paris VI-Pierre and Marie Curie",
        333.0,
        38.0,
        0.115,
        0.50,
    ),
    ("RWTH Aachen University", 349.0, 39.0, 0.111, 0.48),
    (
        "Karlsruhe Institute of Technology",
        414.0,
        42.0,
        0.102,
        0.44,
    ),
    ("Katholieke Universiteit Leuven", 318.0, 35.0, 0.111, 0.43),
    ("Ghent University", 270.0, 31.0, 0.113, 0.39),
    ("University of Padova", 184.0, 23.0, 0.126, 0.37),
    ("University of Lisbon", 254.0, 27.0, 0.108, 0.32),
    ("Universidad Autonoma de Madrid", 148.0, 18.0, 0.121, 0.26),
    ("Sapienza University of Rome", 205.0, 22.0, 0.106, 0.24),
    (
        "Universitat Politècnica de València",
        159.0,
        18.0,
        0.112,
        0.23,
    ),
];

pub fn paper(id: &str, citations: u64, authors: &[&[&str]]) -> Publication {
    Publication {
        id: id.into(),
        year: 2014,
        citations,
        authors: authors.iter().map(|a| AuthorAffiliation::of(a)).collect(),
        tags: BTreeSet::new(),
    }
}

fn below(rng: &mut ChaCha8Rng, n: u32) -> u32 {
    rng.next_u32() % n
}

#[derive(Debug, Clone)]
pub struct RandomCorpusSpec {
    pub n: usize,
    /// Citations are drawn from `0..max_citations`; small values force ties.
    pub max_citations: u32,
    pub max_authors: u32,
    /// Allow authors with two countries.
    pub multi_affiliation: bool,
}

pub fn random_corpus(seed: u64, spec: &RandomCorpusSpec) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pubs = (0..spec.n)
        .map(|i| {
            let n_authors = 1 + below(&mut rng, spec.max_authors);
            let authors = (0..n_authors)
                .map(|_| {
                    let k = if spec.multi_affiliation && below(&mut rng, 5) == 0 {
                        2
                    } else {
                        1
                    };
                    AuthorAffiliation::new(
                        (0..k).map(|_| COUNTRIES[below(&mut rng, 6) as usize].parse().unwrap()),
                    )
                })
                .collect();
            // Skewed draw so that high ranks are sparse and low ranks tie heavily.
            let u = below(&mut rng, spec.max_citations);
            let citations = (u * u / spec.max_citations.max(1)) as u64;
            Publication {
                id: format!("W{:05}-{}", below(&mut rng, 100000), i),
                year: 2012 + below(&mut rng, 3) as i32,
                citations,
                authors,
                tags: if below(&mut rng, 4) == 0 {
                    ["ERC".to_string()].into()
                } else {
                    BTreeSet::new()
                },
            }
        })
        .collect();
    Corpus::new(pubs).unwrap()
}

pub fn test_units() -> Vec<UnitDefinition> {
    let mut units: Vec<UnitDefinition> = COUNTRIES
        .iter()
        .map(|c| UnitDefinition::country(c))
        .collect();
    units.push(UnitDefinition::new(
        "EU",
        ["DE".parse().unwrap(), "FR".parse().unwrap()],
    ));
    units.push(UnitDefinition::new(
        "ERA",
        [
            "DE".parse().unwrap(),
            "FR".parse().unwrap(),
            "CH".parse().unwrap(),
        ],
    ));
    units
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
