//! Writes the synthetic fixture datasets (CSV + schema sidecar) into a directory.
//!
//! cargo run -p ema-core --example make_fixtures -- fixtures

use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn write(dir: &Path, name: &str, csv: String, schema: serde_json::Value) {
    fs::write(dir.join(format!("{name}.csv")), csv).unwrap();
    fs::write(dir.join(format!("{name}.schema.json")), serde_json::to_string_pretty(&schema).unwrap() + "\n").unwrap();
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let (u, v): (f64, f64) = (rng.random_range(f64::EPSILON..1.0), rng.random());
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Draw a ranking (1 = most important) of the items by sequential weighted picks.
fn ranking(rng: &mut ChaCha8Rng, weights: [f64; 4]) -> [u8; 4] {
    let mut left: Vec<usize> = (0..4).collect();
    let mut ranks = [0u8; 4];
    for r in 1..=4u8 {
        let total: f64 = left.iter().map(|&i| weights[i]).sum();
        let mut x = rng.random::<f64>() * total;
        let mut pick = left.len() - 1;
        for (j, &i) in left.iter().enumerate() {
            if x < weights[i] {
                pick = j;
                break;
            }
            x -= weights[i];
        }
        ranks[left.remove(pick)] = r;
    }
    ranks
}

fn popular_kids(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(1992);
    let mut goals: Vec<&str> = [("Grades", 247), ("Popular", 141), ("Sports", 90)]
        .iter()
        .flat_map(|&(g, n)| std::iter::repeat_n(g, n))
        .collect();
    goals.shuffle(&mut rng);
    let schools = [
        ("Brentwood Elementary", "Suburban"),
        ("Brentwood Middle", "Suburban"),
        ("Ridge", "Suburban"),
        ("Sand", "Rural"),
        ("Eaton", "Rural"),
        ("Main", "Urban"),
        ("Elm", "Urban"),
        ("Westdale", "Rural"),
        ("Lincoln Heights", "Urban"),
    ];
    let mut csv = String::from("StudentId,Gender,Grade,Age,Race,UrbanRural,School,Goal,Grades,Sports,Looks,Money\n");
    for (i, goal) in goals.iter().enumerate() {
        let boy = match *goal {
            "Sports" => rng.random_bool(0.7),
            "Popular" => rng.random_bool(0.35),
            _ => rng.random_bool(0.45),
        };
        let grade = rng.random_range(4..=6);
        let age = grade + 5 + rng.random_range(0..=1);
        let race = if rng.random_bool(0.9) { "White" } else { "Other" };
        let (school, setting) = schools[rng.random_range(0..schools.len())];
        let weights = match (*goal, boy) {
            ("Grades", _) => [5.0, 1.5, 1.2, 0.6],
            ("Sports", true) => [1.0, 6.0, 1.0, 0.7],
            ("Sports", false) => [1.2, 4.0, 1.6, 0.7],
            ("Popular", true) => [1.0, 2.5, 3.0, 1.5],
            _ => [1.0, 1.2, 5.0, 1.5],
        };
        let r = ranking(&mut rng, weights);
        csv += &format!(
            "S{:04},{},{grade},{age},{race},{setting},{school},{goal},{},{},{},{}\n",
            i + 1,
            if boy { "boy" } else { "girl" },
            r[0],
            r[1],
            r[2],
            r[3]
        );
    }
    let schema = serde_json::json!({
        "name": "Popular Kids",
        "description": "Synthetic survey of 478 students in grades 4-6 ranking what makes peers popular",
        "source": "synthetic stand-in generated by make_fixtures (seed 1992)",
        "shape": "tabular",
        "columns": [
            {"name": "StudentId", "kind": "key"},
            {"name": "Gender", "kind": "categorical"},
            {"name": "Grade", "kind": "numeric"},
            {"name": "Age", "kind": "numeric", "unit": "years"},
            {"name": "Race", "kind": "categorical"},
            {"name": "UrbanRural", "kind": "categorical"},
            {"name": "School", "kind": "categorical"},
            {"name": "Goal", "kind": "categorical"},
            {"name": "Grades", "kind": "numeric", "unit": "rank"},
            {"name": "Sports", "kind": "numeric", "unit": "rank"},
            {"name": "Looks", "kind": "numeric", "unit": "rank"},
            {"name": "Money", "kind": "numeric", "unit": "rank"}
        ]
    });
    write(dir, "popular_kids", csv, schema);
}

fn auto_mpg(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(1983);
    let missing_hp: Vec<usize> = vec![32, 126, 330, 336, 354, 374];
    let makes = ["chevrolet", "ford", "plymouth", "amc", "dodge", "toyota", "datsun", "honda", "volkswagen", "peugeot", "fiat", "volvo"];
    let mut csv = String::from("mpg,cylinders,displacement,horsepower,weight,acceleration,model_year,origin,car_name\n");
    for i in 0..398 {
        let cylinders = *[4, 4, 4, 4, 6, 6, 8, 8, 3, 5].choose(&mut rng).unwrap();
        let origin = if cylinders >= 6 { "usa" } else { ["usa", "europe", "japan"][rng.random_range(0..3)] };
        let displacement = (cylinders as f64 * rng.random_range(22.0..50.0)).round();
        let horsepower = (displacement * 0.35 + 25.0 + 8.0 * normal(&mut rng)).round().max(46.0);
        let weight = (displacement * 6.5 + 1500.0 + 180.0 * normal(&mut rng)).round();
        let acceleration = ((22.0 - horsepower / 20.0 + normal(&mut rng)) * 10.0).round() / 10.0;
        let year = 70 + (i * 13 / 398) as i64;
        let mpg = 46.0 - 0.0062 * weight - 0.045 * horsepower + 0.75 * (year - 70) as f64 + 1.6 * normal(&mut rng);
        let mpg = (mpg.max(9.0) * 10.0).round() / 10.0;
        let hp = if missing_hp.contains(&i) { "?".to_string() } else { horsepower.to_string() };
        let name = format!("{} model {}", makes[rng.random_range(0..makes.len())], i + 1);
        csv += &format!("{mpg},{cylinders},{displacement},{hp},{weight},{acceleration},{year},{origin},{name}\n");
    }
    let schema = serde_json::json!({
        "name": "Auto MPG",
        "description": "Synthetic fuel economy records for 398 car models, 1970-1982",
        "source": "synthetic stand-in generated by make_fixtures (seed 1983)",
        "shape": "tabular",
        "columns": [
            {"name": "mpg", "kind": "numeric", "unit": "miles per gallon"},
            {"name": "cylinders", "kind": "numeric"},
            {"name": "displacement", "kind": "numeric", "unit": "cubic inches"},
            {"name": "horsepower", "kind": "numeric", "unit": "hp"},
            {"name": "weight", "kind": "numeric", "unit": "lb"},
            {"name": "acceleration", "kind": "numeric", "unit": "s"},
            {"name": "model_year", "kind": "numeric"},
            {"name": "origin", "kind": "categorical"},
            {"name": "car_name", "kind": "reference"}
        ]
    });
    write(dir, "auto_mpg", csv, schema);
}

fn mixed_small(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut csv = String::from("species,length,width\n");
    for _ in 0..40 {
        let s = rng.random_range(0..3);
        let length = ((4.0 + 1.5 * s as f64 + 0.4 * normal(&mut rng)) * 100.0).round() / 100.0;
        let width = ((length * 0.45 + 0.2 * normal(&mut rng)) * 100.0).round() / 100.0;
        csv += &format!("{},{length},{width}\n", ["setosa", "versicolor", "virginica"][s]);
    }
    let schema = serde_json::json!({
        "name": "Mixed small",
        "description": "One categorical and two numeric columns",
        "source": "synthetic (seed 12)",
        "columns": [
            {"name": "species", "kind": "categorical"},
            {"name": "length", "kind": "numeric", "unit": "cm"},
            {"name": "width", "kind": "numeric", "unit": "cm"}
        ]
    });
    write(dir, "mixed_small", csv, schema);
}

fn monthly_sales(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut csv = String::from("month,sales\n");
    for i in 0..96 {
        let (y, m) = (2012 + i / 12, i % 12 + 1);
        let season = [0.0, -4.0, 2.0, 5.0, 9.0, 14.0, 18.0, 16.0, 8.0, 3.0, -2.0, 12.0][i % 12];
        let v = 100.0 + 0.8 * i as f64 + season + 2.0 * normal(&mut rng);
        csv += &format!("{y}-{m:02}-01,{:.1}\n", v);
    }
    let schema = serde_json::json!({
        "name": "Monthly sales",
        "description": "Eight years of monthly retail sales with yearly seasonality",
        "source": "synthetic (seed 7)",
        "shape": "timeseries",
        "seasonPeriod": 12,
        "columns": [
            {"name": "month", "kind": "datetime"},
            {"name": "sales", "kind": "numeric", "unit": "k$"}
        ]
    });
    write(dir, "monthly_sales", csv, schema);
}

fn ratings(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let user_bias: Vec<f64> = (0..25).map(|_| 0.6 * normal(&mut rng)).collect();
    let item_bias: Vec<f64> = (0..15).map(|_| 0.8 * normal(&mut rng)).collect();
    let mut csv = String::from("user,item,rating\n");
    for (u, ub) in user_bias.iter().enumerate() {
        for (i, ib) in item_bias.iter().enumerate() {
            if rng.random_bool(0.4) {
                let r = (3.5 + ub + ib + 0.4 * normal(&mut rng)).clamp(1.0, 5.0).round();
                csv += &format!("u{u:02},i{i:02},{r}\n");
            }
        }
    }
    let schema = serde_json::json!({
        "name": "Ratings",
        "description": "User-item ratings on a 1-5 scale",
        "source": "synthetic (seed 5)",
        "shape": "ratingsTriple",
        "columns": [
            {"name": "user", "kind": "categorical"},
            {"name": "item", "kind": "categorical"},
            {"name": "rating", "kind": "numeric", "unit": "stars"}
        ]
    });
    write(dir, "ratings", csv, schema);
}

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let dir = Path::new(&dir);
    fs::create_dir_all(dir).unwrap();
    popular_kids(dir);
    auto_mpg(dir);
    mixed_small(dir);
    monthly_sales(dir);
    ratings(dir);
}
