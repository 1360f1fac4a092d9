//! Seeded generator of survey data shaped like a course-evaluation form:
//! three opinion groups, a course block and an instructor block of items,
//! and many respondents who give the same answer to every question.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};

use crate::dataset::{default_item_names, EvaluationDataset, LikertMatrix, Metadata};

#[derive(Clone, Debug, PartialEq)]
pub struct SurveyGenerator {
    pub n: usize,
    pub items: usize,
    /// Items `1..=course_items` load on the course factor, the rest on the instructor factor.
    pub course_items: usize,
    pub seed: u64,
    /// Share of respondents answering every item identically.
    pub flat_fraction: f64,
    pub group_weights: [f64; 3],
    pub group_centers: [f64; 3],
    pub noise: f64,
    pub instructors: u32,
    pub courses: u32,
}

impl SurveyGenerator {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            items: 28,
            course_items: 12,
            seed,
            flat_fraction: 0.5,
            group_weights: [0.18, 0.24, 0.58],
            group_centers: [1.5, 3.3, 4.7],
            noise: 0.45,
            instructors: 3,
            courses: 13,
        }
    }

    pub fn generate(&self) -> EvaluationDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let groups = WeightedIndex::new(self.group_weights).expect("positive weights");
        let unit = Normal::new(0.0, 1.0).expect("valid normal");
        let mut rows = Vec::with_capacity(self.n);
        let mut meta = Metadata::default();
        for _ in 0..self.n {
            let g = groups.sample(&mut rng);
            let center = self.group_centers[g];
            let row: Vec<u8> = if rng.gen_bool(self.flat_fraction) {
                vec![clamp_level(center + 0.4 * unit.sample(&mut rng)); self.items]
            } else {
                let course = 0.5 * unit.sample(&mut rng);
                let instr = 0.5 * unit.sample(&mut rng);
                (0..self.items)
                    .map(|j| {
                        let shift = if j < self.course_items { course } else { instr };
                        clamp_level(center + shift + self.noise * unit.sample(&mut rng))
                    })
                    .collect()
            };
            let attendance = clamp_code(g as f64 * 1.4 + 0.9 * unit.sample(&mut rng), 0, 4);
            let difficulty = clamp_code(1.5 + 0.7 * attendance as f64 + 0.8 * unit.sample(&mut rng), 1, 5);
            meta.instructor.push(rng.gen_range(1..=self.instructors));
            meta.course.push(rng.gen_range(1..=self.courses));
            meta.repetitions.push(if rng.gen_bool(0.85) { 1 } else { rng.gen_range(2..=3) });
            meta.attendance.push(attendance);
            meta.difficulty.push(difficulty);
            rows.push(row);
        }
        let m = LikertMatrix::from_codes(default_item_names("Q", self.items), &rows).expect("levels in range");
        EvaluationDataset::new(m, meta).expect("aligned metadata")
    }
}

fn clamp_level(x: f64) -> u8 {
    clamp_code(x, 1, 5)
}

fn clamp_code(x: f64, lo: u8, hi: u8) -> u8 {
    x.round().clamp(lo as f64, hi as f64) as u8
}
