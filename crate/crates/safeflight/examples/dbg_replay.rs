use nalgebra::{DMatrix, DVector};
use safeflight::qp::{QpProblem, QpSolver};

fn parse(path: &str) -> QpProblem {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let mut mats = std::collections::HashMap::new();
    let mut vecs = std::collections::HashMap::new();
    while let Some(header) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() == 3 {
            let (r, c) = (parts[1].parse::<usize>().unwrap(), parts[2].parse::<usize>().unwrap());
            let mut data = Vec::with_capacity(r * c);
            for _ in 0..r {
                let row = lines.next().unwrap();
                data.extend(row.split_whitespace().map(|x| x.parse::<f64>().unwrap()));
            }
            mats.insert(parts[0].to_string(), DMatrix::from_row_slice(r, c, &data));
        } else if parts.len() == 2 {
            let n = parts[1].parse::<usize>().unwrap();
            let row = lines.next().unwrap_or("");
            let data: Vec<f64> = row.split_whitespace().map(|x| x.parse().unwrap()).collect();
            assert_eq!(data.len(), n);
            vecs.insert(parts[0].to_string(), DVector::from_vec(data));
        }
    }
    QpProblem {
        q: mats["Q"].clone(),
        f: vecs["f"].clone(),
        a: mats["A"].clone(),
        b: vecs["b"].clone(),
        a_eq: mats["A_eq"].clone(),
        b_eq: vecs["b_eq"].clone(),
    }
}

fn main() {
    let path = std::env::args().nth(1).unwrap();
    let p = parse(&path);
    println!("n={} m={} meq={}", p.n(), p.a.nrows(), p.a_eq.nrows());
    let solver = QpSolver::default();
    let sol = solver.solve(&p).unwrap();
    println!("status {:?} iters {} kkt {:.3e}", sol.status, sol.iterations, sol.kkt_residual);
}
