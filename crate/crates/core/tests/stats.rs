use mixfan::data::*;
use mixfan::estimation::*;

fn ds(rows: &[(usize, usize)]) -> Dataset {
    let schema = Schema::with_class_name(
        vec![VariableDecl::discrete("X", ["0", "1"]), VariableDecl::discrete("Pa", ["0", "1"])],
        "Pa",
    )
    .unwrap();
    let cases = rows.iter().map(|&(x, p)| Case(vec![Cell::Discrete(x), Cell::Discrete(p)])).collect();
    Dataset::new(schema, cases).unwrap()
}

#[test]
fn counts_per_parent_configuration() {
    let d = ds(&[(0, 0), (0, 0), (1, 0), (0, 1)]);
    let s = count_stats(&d, 0, &[1]).unwrap();
    let s = s.as_discrete().unwrap();
    assert_eq!(s.row(0), &[2.0, 1.0]);
    assert_eq!(s.row(1), &[1.0, 0.0]);
    assert_eq!(s.config_total(0), 3.0);
}

#[test]
fn empty_parent_set_is_histogram() {
    let d = ds(&[(0, 0), (1, 0), (1, 1)]);
    let s = count_stats(&d, 0, &[]).unwrap();
    assert_eq!(s.as_discrete().unwrap().row(0), &[1.0, 2.0]);
}

#[test]
fn continuous_child_moments() {
    let schema = Schema::with_class_name(
        vec![VariableDecl::continuous("X"), VariableDecl::discrete("Pa", ["0", "1"])],
        "Pa",
    )
    .unwrap();
    let cases = [1.0, 2.0, 3.0]
        .iter()
        .map(|&x| Case(vec![Cell::Continuous(x), Cell::Discrete(0)]))
        .collect();
    let d = Dataset::new(schema, cases).unwrap();
    let s = count_stats(&d, 0, &[1]).unwrap();
    let g = s.as_gaussian().unwrap();
    assert_eq!((g.weight[0], g.sum[0], g.sum_sq[0]), (3.0, 6.0, 14.0));
    assert_eq!(g.weight[1], 0.0);
}

#[test]
fn missing_is_rejected() {
    let mut d = ds(&[(0, 0)]);
    d = Dataset::new(d.schema().clone(), vec![Case(vec![Cell::Missing, Cell::Discrete(0)])]).unwrap();
    assert!(count_stats(&d, 0, &[1]).is_err());
}
