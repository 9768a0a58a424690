use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::network::Topology;
use crate::subproblem::LineVars;

/// Primal values a bus publishes before the y-update.
#[derive(Clone, Debug, PartialEq)]
pub enum XShare {
    /// Parent to child: `v` of `x_{A_j,0}`.
    Voltage(HermitianMatrix),
    /// Child to parent: `(S, l)` of `x_{j0}`.
    Line(LineVars),
}

/// Observations and multipliers a bus holds about a neighbor, sent to that
/// neighbor before the x-update.
#[derive(Clone, Debug, PartialEq)]
pub enum YShare {
    /// Parent to child: `y_{j,A_j}` and `mu_{j,A_j}`.
    LineCopy { value: LineVars, dual: LineVars },
    /// Child to parent: `y_{A_j,j}` and `mu_{A_j,j}`.
    VoltageCopy { value: HermitianMatrix, dual: HermitianMatrix },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    X(XShare),
    Y(YShare),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub sender: usize,
    pub receiver: usize,
    pub message: Message,
}

/// Messages delivered to one bus, slotted by neighbor.
#[derive(Clone, Debug, Default)]
pub struct Inbox {
    pub parent: Option<Message>,
    pub children: Vec<Option<Message>>,
}

/// Routes every envelope into its receiver's inbox. A message between buses
/// that are not adjacent in the tree is an error.
pub fn deliver(topo: &Topology, outgoing: Vec<Vec<Envelope>>) -> Result<Vec<Inbox>> {
    let mut inboxes: Vec<Inbox> = topo
        .children
        .iter()
        .map(|c| Inbox {
            parent: None,
            children: vec![None; c.len()],
        })
        .collect();
    for env in outgoing.into_iter().flatten() {
        let (s, r) = (env.sender, env.receiver);
        let inbox = inboxes
            .get_mut(r)
            .ok_or_else(|| Error::Unsupported(format!("message to unknown bus index {r}")))?;
        if topo.parent[r] == Some(s) {
            inbox.parent = Some(env.message);
        } else if let Some(k) = topo.children[r].iter().position(|&c| c == s) {
            inbox.children[k] = Some(env.message);
        } else {
            return Err(Error::Unsupported(format!(
                "message from bus index {s} to non-neighbor {r}"
            )));
        }
    }
    Ok(inboxes)
}
