//! Property tests of the carrier laws: abelian-group axioms for every carrier, ring axioms
//! for `Z` and `Q`, the `Z`-module action, order independence of aggregation, and literal
//! round trips.

use num_bigint::BigInt;
use proptest::prelude::*;
use wagg_core::algebra::{aggregate, combine};
use wagg_core::{ArithOp, Carrier, CarrierValue, Error};

fn carrier() -> impl Strategy<Value = Carrier> {
    prop_oneof![
        Just(Carrier::IntegerRing),
        Just(Carrier::RationalField),
        prop::sample::select(vec![2u64, 3, 5, 7, 12]).prop_map(Carrier::ResidueGroup),
        (1usize..=3).prop_map(Carrier::RationalVectorGroup),
    ]
}

fn rational() -> impl Strategy<Value = (i64, i64)> {
    (-40i64..=40, 1i64..=12)
}

fn value_of(c: &Carrier) -> BoxedStrategy<CarrierValue> {
    match c.clone() {
        Carrier::IntegerRing => (-1000i64..=1000).prop_map(CarrierValue::int).boxed(),
        Carrier::RationalField => rational().prop_map(|(n, d)| CarrierValue::rat(n, d)).boxed(),
        Carrier::ResidueGroup(m) => (-100i64..=100).prop_map(move |v| CarrierValue::residue(&BigInt::from(v), m)).boxed(),
        Carrier::RationalVectorGroup(k) => prop::collection::vec(rational(), k)
            .prop_map(|cs| {
                CarrierValue::Vector(
                    cs.into_iter()
                        .map(|(n, d)| match CarrierValue::rat(n, d) {
                            CarrierValue::Rat(r) => r,
                            _ => unreachable!(),
                        })
                        .collect(),
                )
            })
            .boxed(),
    }
}

/// A carrier with three of its elements.
fn triple() -> impl Strategy<Value = (Carrier, CarrierValue, CarrierValue, CarrierValue)> {
    carrier().prop_flat_map(|c| {
        let v = value_of(&c);
        (Just(c), v.clone(), v.clone(), v)
    })
}

fn ring_triple() -> impl Strategy<Value = (CarrierValue, CarrierValue, CarrierValue)> {
    prop_oneof![Just(Carrier::IntegerRing), Just(Carrier::RationalField)].prop_flat_map(|c| {
        let v = value_of(&c);
        (v.clone(), v.clone(), v)
    })
}

fn add(a: &CarrierValue, b: &CarrierValue) -> CarrierValue {
    combine(a, b, ArithOp::Add).unwrap()
}

fn mul(a: &CarrierValue, b: &CarrierValue) -> CarrierValue {
    combine(a, b, ArithOp::Mul).unwrap()
}

proptest! {
    #[test]
    fn addition_is_an_abelian_group((c, a, b, d) in triple()) {
        prop_assert_eq!(add(&add(&a, &b), &d), add(&a, &add(&b, &d)));
        prop_assert_eq!(add(&a, &b), add(&b, &a));
        prop_assert_eq!(add(&a, &c.zero()), a.clone());
        prop_assert!(add(&a, &a.neg()).is_zero());
        prop_assert_eq!(combine(&a, &b, ArithOp::Sub).unwrap(), add(&a, &b.neg()));
    }

    #[test]
    fn multiplication_is_a_commutative_ring((a, b, d) in ring_triple()) {
        let one = a.carrier().one().unwrap();
        prop_assert_eq!(mul(&mul(&a, &b), &d), mul(&a, &mul(&b, &d)));
        prop_assert_eq!(mul(&a, &b), mul(&b, &a));
        prop_assert_eq!(mul(&a, &one), a.clone());
        prop_assert_eq!(mul(&a, &add(&b, &d)), add(&mul(&a, &b), &mul(&a, &d)));
        prop_assert!(mul(&a, &a.carrier().zero()).is_zero());
    }

    #[test]
    fn scaling_is_the_integer_module_action((c, a, _, _) in triple(), m in -6i64..=6, n in -6i64..=6) {
        let (bm, bn) = (BigInt::from(m), BigInt::from(n));
        prop_assert_eq!(a.scale(&(&bm + &bn)), add(&a.scale(&bm), &a.scale(&bn)));
        prop_assert_eq!(a.scale(&(&bm * &bn)), a.scale(&bm).scale(&bn));
        let mut repeated = c.zero();
        for _ in 0..m.unsigned_abs() {
            repeated = add(&repeated, &a);
        }
        if m < 0 {
            repeated = repeated.neg();
        }
        prop_assert_eq!(a.scale(&bm), repeated);
    }

    #[test]
    fn aggregation_ignores_order(
        (c, values) in carrier().prop_flat_map(|c| { let v = value_of(&c); (Just(c), prop::collection::vec(v, 0..12)) }),
        rotation in 0usize..12,
    ) {
        let total = aggregate(&values, &c).unwrap();
        let mut shuffled = values.clone();
        shuffled.reverse();
        if !shuffled.is_empty() {
            let k = rotation % shuffled.len();
            shuffled.rotate_left(k);
        }
        prop_assert_eq!(aggregate(&shuffled, &c).unwrap(), total.clone());
        let folded = values.iter().fold(c.zero(), |acc, v| add(&acc, v));
        prop_assert_eq!(folded, total);
    }

    #[test]
    fn literals_round_trip((c, a, _, _) in triple()) {
        prop_assert_eq!(c.parse_value(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn groups_reject_multiplication_and_carriers_do_not_mix((c, a, b, _) in triple()) {
        if !c.is_ring() {
            prop_assert!(matches!(combine(&a, &b, ArithOp::Mul), Err(Error::MulOnGroup(_))));
        }
        let other = if c == Carrier::IntegerRing { CarrierValue::rat(1, 2) } else { CarrierValue::int(1) };
        prop_assert!(matches!(combine(&a, &other, ArithOp::Add), Err(Error::CarrierMismatch(_))));
    }
}

#[test]
fn fixed_examples() {
    let five = Carrier::ResidueGroup(5);
    let (three, four) = (five.parse_value("3").unwrap(), five.parse_value("4 mod 5").unwrap());
    assert_eq!(add(&three, &four), five.parse_value("2").unwrap());
    let two = Carrier::ResidueGroup(2);
    let ones = vec![two.parse_value("1").unwrap(); 5];
    assert_eq!(aggregate(&ones, &two).unwrap(), two.parse_value("1").unwrap());
    assert_eq!(aggregate(&[], &Carrier::RationalField).unwrap(), CarrierValue::rat(0, 1));
    assert_eq!(add(&CarrierValue::rat(1, 3), &CarrierValue::rat(1, 6)), CarrierValue::rat(1, 2));
}
