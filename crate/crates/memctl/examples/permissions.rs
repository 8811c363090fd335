//! The permission system: kinds, locking, splitting, and existence tokens.
//!
//! ```bash
//! cargo run --example permissions
//! ```

use memctl::perm::{Perm, PermKind};
use memctl::sepalg::{checked_difference, checked_union, rat, SepAlg};

fn main() {
    let full = Perm::full();
    println!("full permission     {full}   kind {:?}", full.kind());

    // A store locks the object until the next sequence point.
    let locked = full.lock();
    println!("after a store       {locked}   kind {:?}", locked.kind());
    println!("after the ;         {}   (round trip: {})", locked.unlock(), locked.unlock() == full);

    // Splitting for shared reads: both halves are readable and recombine.
    let half = full.half();
    println!("half of full        {half}   kind {:?}", half.kind());
    println!("halves recombine    {}", checked_union(&half, &half).unwrap() == full);

    // Existence tokens allow pointer arithmetic but nothing else; handing
    // one out forfeits deallocation until it is returned.
    let token = Perm::token();
    println!("token               {token}   kind {:?}", token.kind());
    let rest = checked_difference(&full, &token).unwrap();
    println!("full minus token    {rest}   kind {:?}", rest.kind());
    println!("still writable      {}", rest.kind() == PermKind::Writable);
    println!("still full?         {}", rest.is_full());
    println!("token returns       {}", checked_union(&token, &rest).unwrap() == full);

    // Const permissions are read-only shares with no locked variant.
    let c = Perm::constant(rat(1, 2));
    println!("const half          {c}   kind {:?}   lock is identity: {}", c.kind(), c.lock() == c);

    // The kind lattice: Locked and Readable are incomparable.
    println!(
        "Readable ≤ Locked   {}   Locked ≤ Writable {}",
        PermKind::Readable.le(PermKind::Locked),
        PermKind::Locked.le(PermKind::Writable)
    );
}
