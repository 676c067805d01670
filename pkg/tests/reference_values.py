"""High-precision reference values shared by the unit and acceptance tests."""

# (auc_a, auc_b, t, two-sided p) computed beforehand with mpmath at 60 digits
FROZEN_T_CASES = [
    ([0.8256, 0.6448], [0.8027, 0.6643], 0.080188679245284673926, 0.94905930138075758984),
    ([0.9189, 0.6889, 0.6486], [0.8987, 0.6427, 0.6236], 3.8141649879870856713, 0.062376189100299669661),
    ([0.7976, 0.8212, 0.6241, 0.781], [0.7766, 0.785, 0.6316, 0.7697], 1.666285246152189152, 0.19424695399500148018),
    ([0.7723, 0.6742, 0.6469, 0.7184, 0.6818], [0.779, 0.6976, 0.6619, 0.7328, 0.6834], -3.2616949253219731253, 0.031031154544596371841),
    ([0.8034, 0.696, 0.9207, 0.7078, 0.8429], [0.7402, 0.6793, 0.8667, 0.6859, 0.8321], 3.1524801295612900225, 0.034431837126791490577),
    ([0.6863, 0.6321, 0.8872, 0.8031, 0.7092], [0.6736, 0.6554, 0.8716, 0.7661, 0.7115], 0.79269076335938456464, 0.47232163298181225842),
    ([0.8855, 0.7764, 0.7668, 0.7155, 0.7243], [0.8088, 0.7011, 0.7026, 0.6828, 0.6754], 7.1234846495841760075, 0.0020529317026448062149),
    ([0.7466, 0.729, 0.685, 0.8809, 0.6029, 0.6806], [0.7756, 0.7261, 0.721, 0.8832, 0.6145, 0.6978], -2.5271729387184465668, 0.052711359251545449763),
    ([0.7068, 0.7249, 0.8716, 0.6138, 0.8457, 0.7559, 0.7965], [0.6966, 0.7221, 0.8578, 0.604, 0.8149, 0.7371, 0.7767], 4.4454703098213409146, 0.0043502277091706440089),
    ([0.6429, 0.8215, 0.6057, 0.672, 0.6761, 0.6865, 0.7759, 0.6599], [0.6404, 0.8109, 0.6302, 0.6839, 0.6656, 0.6395, 0.7647, 0.6591], 0.7839367232390404507, 0.4587776123287401213),
    ([0.6816, 0.6632, 0.7847, 0.7317, 0.6133, 0.8889, 0.6873, 0.7517, 0.6522, 0.7286], [0.6623, 0.6852, 0.784, 0.7516, 0.6059, 0.875, 0.674, 0.7457, 0.6385, 0.7151], 1.0061260994197531275, 0.3406376363382212232),
    ([0.9018, 0.702, 0.7477, 0.9589, 0.8667], [0.84, 0.638, 0.6654, 0.8798, 0.7688], 11.682120522002196258, 0.00030700225198745297575),
    ([0.5527, 0.5102, 0.6112, 0.656, 0.7297], [0.6156, 0.6179, 0.6776, 0.711, 0.769], -5.8313684372157460068, 0.0043090845428709920606),
    ([0.8138, 0.8615, 1.0813], [0.6465, 0.666, 0.8844], 19.349761350736329157, 0.002660192832763944437),
    ([0.5725, 0.8191, 0.6818, 0.7294], [0.602, 0.7992, 0.6938, 0.7073], 0.0099376349656461135038, 0.99269495323637103048),
    ([0.8536, 0.8057, 0.9245, 0.8748, 0.7963], [0.8446, 0.7534, 0.8922, 0.8518, 0.788], 3.0546800734024557182, 0.037854666177673071076),
    ([0.638, 0.7136, 0.7803, 0.733, 0.7384, 0.8304, 0.8348, 0.6183, 0.8635, 0.7844, 0.8771, 0.7585], [0.625, 0.717, 0.8152, 0.7786, 0.7597, 0.8228, 0.85, 0.6063, 0.8691, 0.7807, 0.863, 0.7469], -0.92360231232708279442, 0.37550904770958023862),
    ([0.8644, 0.7611, 0.8301, 0.9005, 0.846], [0.8598, 0.7123, 0.8313, 0.8962, 0.8438], 1.2593000608313604902, 0.27639699043010169186),
    ([0.862, 0.9205], [0.8084, 0.8899], 3.6608695652173855119, 0.16975719502338140577),
    ([0.844, 0.6905, 0.8851, 0.6097, 0.6656, 0.8576, 0.7791, 0.8347, 0.7384, 0.6167, 0.7744, 0.792, 0.6471, 0.8013, 0.7956, 0.8682, 0.7612, 0.7786, 0.7996, 0.7081], [0.8594, 0.6825, 0.8643, 0.6178, 0.6643, 0.8436, 0.7679, 0.8511, 0.7142, 0.6102, 0.7745, 0.7943, 0.6363, 0.7838, 0.8241, 0.8887, 0.7988, 0.7728, 0.795, 0.7181], -0.19122482347759506236, 0.85037809276044603817),
]
