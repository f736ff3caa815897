package com.example.app09;

public class Store {
    private String name = "item 109";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 109);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
