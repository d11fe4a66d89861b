"""Command table: which management command exposes which library operation.

Each public operation is reachable from exactly one subcommand.
"""
COMMAND_TABLE = {
    'validate': (
        'apps.scm.serializers.load_scm',
        'apps.scm.engine.induced_graph',
        'apps.scm.engine.apply_intervention',
        'apps.scm.engine.joint_distribution',
        'apps.graphs.serializers.load_graph',
        'apps.embeddings.operations.validate_structure',
        'apps.scm.engine.query',
        'apps.scm.engine.solve',
    ),
    'project': (
        'apps.graphs.serializers.parse_edge_list',
        'apps.graphs.serializers.format_edge_list',
        'apps.graphs.operations.topological_order',
        'apps.graphs.operations.mediated_adjacencies',
        'apps.graphs.operations.mediated_confounders',
        'apps.graphs.operations.latent_project',
        'apps.graphs.operations.is_cdag',
        'apps.embeddings.construction.construct_consistent_high_level',
        'apps.embeddings.operations.tupling_embedding',
    ),
    'check-embedding': (
        'apps.embeddings.operations.is_embedding',
        'apps.embeddings.operations.check_graph_embedding',
    ),
    'embed-error': (
        'apps.embeddings.operations.pushforward',
        'apps.embeddings.operations.embedding_error',
        'apps.embeddings.operations.abstraction_error',
    ),
    'certify': (
        'apps.marginal.serializers.load_problem',
        'apps.marginal.operations.reduce',
        'apps.marginal.operations.fixed_queries',
        'apps.marginal.operations.overlap_disagreements',
        'apps.marginal.operations.certify_solution',
        'apps.marginal.operations.is_identity_embedding',
        'apps.marginal.operations.restriction_matches',
    ),
    'gen-ecosystem': (
        'apps.fixtures.ecosystem.ecosystem_ground_truth',
        'apps.fixtures.ecosystem.generate_ecosystem_datasets',
        'apps.scm.engine.sample',
    ),
    'merge': (
        'apps.merging.operations.concat_with_missing',
        'apps.merging.operations.knn_impute',
        'apps.merging.operations.merge',
        'apps.merging.operations.merge_report',
    ),
    'kl': (
        'apps.merging.operations.transform_dataset',
        'apps.merging.operations.empirical_distribution',
        'apps.merging.operations.kl_divergence',
        'apps.merging.operations.kl_table',
    ),
    'fixtures': (
        'apps.scm.engine.from_conditionals',
        'apps.fixtures.catalog.counterexample_b3',
        'apps.fixtures.catalog.nonuniqueness_c1',
        'apps.fixtures.catalog.embedding_diagram',
        'apps.fixtures.ecosystem.ecosystem_discrete',
        'apps.fixtures.catalog.all_bundles',
        'apps.fixtures.catalog.export_fixtures',
        'apps.fixtures.models.FixtureBundle.replay',
    ),
}
