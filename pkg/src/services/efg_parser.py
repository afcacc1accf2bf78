from typing import Dict, List

from lxml import etree

from ..core.exceptions import GameFormatError
from ..utils.logger import logger
from .exact_arith import rat
from .games import GameTree, TreeEdge, TreeNode

NODE_KINDS = ('chance', 'decision', 'terminal')


class GameTreeParser:
    """
    Reads game trees in the XML node-list format:

        <efg players="2" root="n0">
          <node id="n0" kind="chance">
            <edge action="J" prob="1/3" child="n1"/>
          </node>
          <node id="n1" kind="decision" player="0" infoset="J">
            <edge action="bet" child="n2"/>
          </node>
          <node id="n2" kind="terminal" payoffs="1 -1"/>
        </efg>
    """

    def parse(self, xml_bytes: bytes) -> GameTree:
        """Parse an XML document into a GameTree (validation of the tree itself happens on build)."""
        try:
            root = etree.fromstring(xml_bytes)
        except etree.XMLSyntaxError as e:
            logger.error(f"Failed to parse game tree XML: {e}")
            raise GameFormatError(f"invalid XML: {e}") from e

        if root.tag != 'efg':
            raise GameFormatError(f"expected <efg> root element, found <{root.tag}>")
        try:
            n_players = int(root.get('players', ''))
        except ValueError as e:
            raise GameFormatError("attribute 'players' must be an integer") from e
        start = root.get('root')
        if not start:
            raise GameFormatError("attribute 'root' is required")

        nodes: Dict[str, TreeNode] = {}
        for element in root.iter('node'):
            node = self._parse_node(element)
            if node.id in nodes:
                raise GameFormatError(f"duplicate node id: {node.id}")
            nodes[node.id] = node
        logger.info(f"Game tree parsed: {len(nodes)} nodes, {n_players} players")
        return GameTree(n_players, start, nodes)

    def _parse_node(self, element) -> TreeNode:
        node_id = element.get('id')
        kind = element.get('kind')
        if not node_id:
            raise GameFormatError("node without id")
        if kind not in NODE_KINDS:
            raise GameFormatError(f"node {node_id}: kind must be one of {', '.join(NODE_KINDS)}")
        try:
            player = element.get('player')
            node = TreeNode(
                id=node_id,
                kind=kind,
                player=int(player) if player is not None else None,
                infoset=element.get('infoset'),
                edges=[self._parse_edge(e) for e in element.findall('edge')],
            )
            payoffs = element.get('payoffs')
            if payoffs is not None:
                node.payoffs = [rat(v) for v in payoffs.split()]
        except (ValueError, TypeError) as e:
            raise GameFormatError(f"node {node_id}: {e}") from e
        return node

    def _parse_edge(self, element) -> TreeEdge:
        child = element.get('child')
        if not child:
            raise GameFormatError("edge without child")
        prob = element.get('prob')
        return TreeEdge(
            action=element.get('action', child),
            child=child,
            prob=rat(prob) if prob is not None else None,
        )


def single_decision_tree(actions: List[str], payoffs: List[List[str]]) -> GameTree:
    """One decision node of player 0 whose actions lead straight to terminals."""
    n_players = len(payoffs[0])
    nodes = {'root': TreeNode('root', 'decision', player=0, infoset='I',
                              edges=[TreeEdge(a, f"t{k}") for k, a in enumerate(actions)])}
    for k, values in enumerate(payoffs):
        nodes[f"t{k}"] = TreeNode(f"t{k}", 'terminal', payoffs=[rat(v) for v in values])
    return GameTree(n_players, 'root', nodes)
