//! Seeded synthetic datasets.
//!
//! [`credit_like_csv`] mimics the layout of the classic 1000-row German credit
//! table: 21 mixed-type features, a binary `Sex` attribute and a 70/30
//! good/bad target. The target leans on a latent creditworthiness score and,
//! to a lesser degree, on sex; several features are sex proxies, so a model on
//! all non-sensitive features still shows group disparities.
//!
//! [`separable_csv`] has one feature that predicts the target perfectly and
//! nine that carry little or no signal.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::CsvSpec;

pub const CREDIT_ROWS: usize = 1000;

pub const CREDIT_COLUMNS: [&str; 21] = [
    "checking_status",
    "duration",
    "credit_history",
    "purpose",
    "credit_amount",
    "savings",
    "employment",
    "installment_rate",
    "marital_status",
    "Sex",
    "other_debtors",
    "residence_since",
    "property",
    "age",
    "other_installments",
    "housing",
    "existing_credits",
    "job",
    "num_dependents",
    "telephone",
    "foreign_worker",
];

pub fn credit_spec() -> CsvSpec {
    CsvSpec {
        target: "credit_risk".into(),
        sensitive: "Sex".into(),
        positive_label: "good".into(),
    }
}

/// Bucket `x` into `labels` by the ascending `cuts`.
fn bucket<'a>(x: f64, cuts: &[f64], labels: &[&'a str]) -> &'a str {
    labels[cuts.iter().filter(|&&c| x > c).count()]
}

pub fn credit_like_csv(rows: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = CREDIT_COLUMNS.join(",");
    out.push_str(",credit_risk\n");
    for _ in 0..rows {
        let mut g = || std.sample(&mut rng);
        let z = g();
        let female = {
            let u: f64 = g();
            u < -0.5 // about 31% of rows
        };
        let male = if female { 0.0 } else { 1.0 };
        let (n1, n2, n3, n4, n5, n6, n7, n8, n9, n10) = (g(), g(), g(), g(), g(), g(), g(), g(), g(), g());
        let (n11, n12, n13, n14, n15, n16, n17, n18, n19, n20) = (g(), g(), g(), g(), g(), g(), g(), g(), g(), g());

        let checking = bucket(z + 0.9 * n1, &[-0.8, 0.0, 0.9], &["lt0", "0to200", "ge200", "none"]);
        let duration = (20.0 - 6.0 * z + 8.0 * n2).clamp(4.0, 72.0).round();
        let history = bucket(
            0.8 * z + 1.2 * n3,
            &[-1.6, -0.7, 0.3, 1.2],
            &["critical", "delayed", "existing_paid", "all_paid", "no_credits"],
        );
        let purpose = bucket(
            0.9 * n4 - 0.8 * male,
            &[-1.4, -0.9, -0.4, 0.0, 0.4, 0.8, 1.2],
            &["car_new", "business", "car_used", "radio_tv", "education", "repairs", "furniture", "domestic"],
        );
        let amount = ((7.6 + 0.03 * duration + 0.5 * n5).exp()).round();
        let savings = bucket(0.7 * z + 1.3 * n6, &[-0.3, 0.6, 1.1, 1.6], &["lt100", "100to500", "500to1000", "ge1000", "unknown"]);
        let employment = bucket(
            0.6 * male + 0.4 * z + n7,
            &[-1.2, -0.3, 0.6, 1.4],
            &["unemployed", "lt1", "1to4", "4to7", "ge7"],
        );
        let installment = (2.9 + 1.1 * n8).round().clamp(1.0, 4.0);
        let marital = if female {
            bucket(n9, &[-0.4], &["female_single", "female_married"])
        } else {
            bucket(n9, &[-0.9, 0.7], &["male_divorced", "male_single", "male_married"])
        };
        let sex = if female { "female" } else { "male" };
        let debtors = bucket(n10, &[1.4, 1.8], &["none", "guarantor", "co_applicant"]);
        let residence = (2.8 + 1.1 * n11).round().clamp(1.0, 4.0);
        let property = bucket(0.5 * z + n12, &[-0.6, 0.2, 1.0], &["none", "car", "savings_insurance", "real_estate"]);
        let age = (33.0 + 4.0 * male + 2.0 * z + 10.0 * n13.abs()).round().clamp(19.0, 75.0);
        let installments = bucket(n14, &[1.1, 1.5], &["none", "bank", "stores"]);
        let housing = bucket(0.04 * (age - 35.0) + n15, &[-0.9, 0.9], &["rent", "own", "free"]);
        let credits = (1.3 + 0.2 * z + 0.6 * n16.abs()).round().clamp(1.0, 4.0);
        let job = bucket(
            0.7 * male + 0.3 * z + n17,
            &[-1.4, -0.2, 1.2],
            &["unskilled_nonres", "unskilled", "skilled", "management"],
        );
        let dependents = if 0.9 * male + n18 > 1.6 { 2.0 } else { 1.0 };
        let telephone = if 0.3 * z + n19 > 0.3 { "yes" } else { "none" };
        let foreign = if n20 > -1.75 { "yes" } else { "no" };

        let logit = 0.45 + 1.3 * z + 0.6 * male;
        let u: f64 = rng.gen();
        let risk = if u < 1.0 / (1.0 + (-logit).exp()) { "good" } else { "bad" };

        writeln!(
            out,
            "{checking},{duration},{history},{purpose},{amount},{savings},{employment},{installment},{marital},{sex},\
             {debtors},{residence},{property},{age},{installments},{housing},{credits},{job},{dependents},\
             {telephone},{foreign},{risk}"
        )
        .expect("writing to a String");
    }
    out
}

pub fn separable_spec() -> CsvSpec {
    CsvSpec {
        target: "label".into(),
        sensitive: "group".into(),
        positive_label: "1".into(),
    }
}

/// Column `signal` separates the classes; `group` is the sensitive column.
pub fn separable_csv(rows: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = String::from("signal,weak_a,weak_b,noise_a,noise_b,noise_c,noise_d,noise_e,noise_f,group,label\n");
    for i in 0..rows {
        let y = i % 2;
        let sign = if y == 1 { 1.0 } else { -1.0 };
        let signal = sign * (1.0 + rng.gen::<f64>());
        let weak_a = 0.6 * sign + std.sample(&mut rng);
        let weak_b = 0.4 * sign + std.sample(&mut rng);
        let noise: Vec<String> = (0..6).map(|_| format!("{:.6}", std.sample(&mut rng))).collect();
        let group = if rng.gen::<f64>() < 0.5 { "a" } else { "b" };
        writeln!(
            out,
            "{signal:.6},{weak_a:.6},{weak_b:.6},{},{group},{y}",
            noise.join(",")
        )
        .expect("writing to a String");
    }
    out
}
