//! Parses the fenced blocks an oracle answers with.

use jointsmith::oracle::{
    parse_arrow, parse_articulation_tree, parse_hinge_points, parse_hinge_topology, parse_prismatic_class, HingeExpectation,
};

const TREE: &str = "Here is the tree.

```articulation tree
parts:
(1) part_name: lid;
(2) part_name: body;

links:
(1) link_name: body;
(2) link_name: lid;

joints:
(1) joint_name: lid_hinge; joint_type: revolute; parent_link: body; child_link: lid; joint_limit: [0, 110];
```";

fn main() {
    let tree = parse_articulation_tree(TREE).unwrap();
    for j in &tree.joints {
        println!("{} {} {} -> {} {:?}", j.name, j.joint_type, j.parent, j.child, j.limit);
    }
    println!("{:?}", parse_hinge_topology("```hinge_info\ndescription: hinged on its back edge\nchoice: (1)\n```").unwrap());
    println!("{:?}", parse_hinge_points("```hinge points\nselected IDs: 2, 5\n```", HingeExpectation::AtLeastTwo).unwrap());
    println!("{:?}", parse_prismatic_class("```translation_axis_info\nchoice: Outward/Inward\n```").unwrap());
    println!("{:?}", parse_arrow("```sliding direction\nselected arrow: GREEN\n```").unwrap());

    // a reply without its block is rejected with a message naming the block
    match parse_hinge_topology("choice: (1)") {
        Ok(t) => println!("unexpected {t:?}"),
        Err(e) => println!("rejected: {e}"),
    }
}
